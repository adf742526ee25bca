"""Global and patch discriminators plus both sides of the adversarial game.

The patch network ends in a 1x1 convolution so it scores an (H/32, W/32) grid
of patches; the global network ends in a dense layer so it scores the whole
image with one probability.
"""

import torch
import torch.nn as nn
import torch.nn.functional as F

from .layers import SameConv2d, halved, nhwc_shape
from .embedding import EPS, LEAKY_SLOPE, clamped_log, scaled

DISC_WIDTHS = (32, 64, 128, 256, 512)


class PatchDiscriminator(nn.Module):
    """Five stride-2 4x4 convolutions, then a sigmoid 1x1 convolution."""

    def __init__(self, resolution=256, width_div=1, in_channels=3):
        super().__init__()
        widths = [scaled(c, width_div) for c in DISC_WIDTHS]
        rows = {}
        prev = in_channels
        for label, c in zip(("4-a", "4-b", "4-c", "4-d", "4-e"), widths):
            rows[label] = SameConv2d(prev, c, 4, stride=2)
            prev = c
        rows["4-f"] = nn.Conv2d(prev, 1, 1)
        self.rows = nn.ModuleDict(rows)
        self.resolution = resolution

    def forward(self, x, trace=None):
        if x.shape[-1] != self.resolution or x.shape[-2] != self.resolution:
            raise ValueError(f"patch discriminator built for {self.resolution}^2, "
                             f"got {tuple(x.shape)}")
        for label in ("4-a", "4-b", "4-c", "4-d", "4-e"):
            x = F.leaky_relu(self.rows[label](x), LEAKY_SLOPE)
            if trace is not None:
                trace[label] = nhwc_shape(x)
        x = torch.sigmoid(self.rows["4-f"](x))
        if trace is not None:
            trace["4-f"] = nhwc_shape(x)
        return x  # (N, 1, H/32, W/32)


class GlobalDiscriminator(nn.Module):
    """Five stride-2 4x4 convolutions, then a sigmoid dense layer to one score."""

    def __init__(self, resolution=256, width_div=1, in_channels=3):
        super().__init__()
        widths = [scaled(c, width_div) for c in DISC_WIDTHS]
        rows = {}
        prev = in_channels
        for label, c in zip(("5-a", "5-b", "5-c", "5-d", "5-e"), widths):
            rows[label] = SameConv2d(prev, c, 4, stride=2)
            prev = c
        rows["5-f"] = nn.Linear(prev * halved(resolution, 5) ** 2, 1)
        self.rows = nn.ModuleDict(rows)
        self.resolution = resolution

    def forward(self, x, trace=None):
        if x.shape[-1] != self.resolution or x.shape[-2] != self.resolution:
            raise ValueError(f"global discriminator built for {self.resolution}^2, "
                             f"got {tuple(x.shape)}")
        for label in ("5-a", "5-b", "5-c", "5-d", "5-e"):
            x = F.leaky_relu(self.rows[label](x), LEAKY_SLOPE)
            if trace is not None:
                trace[label] = nhwc_shape(x)
        x = torch.sigmoid(self.rows["5-f"](x.flatten(1)))
        if trace is not None:
            trace["5-f"] = tuple(x.shape)
        return x  # (N, 1)


def adversarial_loss_from_scores(scores_fake, scores_real):
    """-E[log(1 - D(fake))] - E[log D(real)], averaging over every score cell."""
    return (-clamped_log(1.0 - scores_fake).mean()
            - clamped_log(scores_real).mean())


def adversarial_losses(x_rec, x_real, d_global, d_patch):
    """Discriminator-side losses for both networks on the same image pair."""
    l_g = adversarial_loss_from_scores(d_global(x_rec), d_global(x_real))
    l_p = adversarial_loss_from_scores(d_patch(x_rec), d_patch(x_real))
    return l_g, l_p


def generator_adversarial_terms(x_rec, d_global, d_patch):
    """Non-saturating generator objective: -E[log D(x_rec)] for each network,
    patch scores averaged over the map."""
    g_g = -clamped_log(d_global(x_rec)).mean()
    g_p = -clamped_log(d_patch(x_rec)).mean()
    return g_g, g_p
