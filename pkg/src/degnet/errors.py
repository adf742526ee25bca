"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid or inconsistent configuration."""


class IngestionError(RuntimeError):
    """A dataset sample could not be loaded; message names the sample."""


class CheckpointError(RuntimeError):
    """Checkpoint file is corrupt or incomplete; message names the offending key."""


class NonFiniteLossError(RuntimeError):
    """A loss term became NaN/inf during training; message names the term."""
