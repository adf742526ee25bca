"""Training configuration: hyperparameters, loss weights, and the desk-scale
profile used for fast local runs. Configs round-trip through JSON files and
hash stably so runs can be identified.
"""

import dataclasses
import hashlib
import json
from dataclasses import dataclass

from .errors import ConfigError


@dataclass
class TrainConfig:
    learning_rate: float = 2e-4
    beta1: float = 0.5
    beta2: float = 0.999
    batch_size: int = 60
    epochs: int = 80
    max_steps: int | None = None  # optional hard cap across epochs

    lambda_m_rec: float = 4000.0
    lambda_f_rec: float = 4000.0
    lambda_l_rec: float = 2000.0
    lambda_lat: float = 30.0
    lambda_adv_g: float = 1.0
    lambda_adv_p: float = 30.0
    gamma: float = 0.5

    resolution: int = 256
    width_div: int = 1
    latent_dim: int = 256
    hole: str = "rect:0.25,0.25,0.5,0.5"
    fill_value: float = 1.0
    landmark_radius: int | None = None

    seed: int = 0
    checkpoint_every: int = 0  # steps between checkpoints; 0 = final only
    device: str = "cpu"

    def validate(self):
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        for name in ("lambda_m_rec", "lambda_f_rec", "lambda_l_rec", "lambda_lat",
                     "lambda_adv_g", "lambda_adv_p"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0, got {getattr(self, name)}")
        if self.gamma < 0:
            raise ConfigError(f"gamma must be >= 0, got {self.gamma}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.epochs < 0:
            raise ConfigError(f"epochs must be >= 0, got {self.epochs}")
        if self.resolution % 16 != 0 or self.resolution <= 0:
            raise ConfigError(f"resolution must be a positive multiple of 16, "
                              f"got {self.resolution}")
        grid = self.resolution // 16
        if (2 * self.latent_dim) % (grid * grid) != 0:
            raise ConfigError(f"joint latent size {2 * self.latent_dim} does not "
                              f"tile a {grid}x{grid} injection grid")
        if self.width_div < 1:
            raise ConfigError(f"width_div must be >= 1, got {self.width_div}")
        return self

    @classmethod
    def desk_profile(cls, **overrides):
        """Small non-production profile for laptop-scale runs: 64^2 images,
        quarter-width networks, small batches."""
        base = dict(resolution=64, width_div=4, batch_size=8, epochs=10,
                    checkpoint_every=0)
        base.update(overrides)
        return cls(**base).validate()

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        return cls(**data).validate()

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def hash(self):
        payload = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]
