"""Inpainting generator: a fully convolutional encoder-decoder with skip
connections whose bottleneck is concatenated with the spatially reshaped
domain latent. Output is a sigmoid image the same size as the input.

Row ids "3-a" .. "3-Y" label the layers and name their checkpoint keys.
"""

import torch
import torch.nn as nn
import torch.nn.functional as F

from .layers import deconv2d, nhwc_shape
from .embedding import scaled

DOWN_WIDTHS = (32, 32, 64, 64, 128, 128, 256, 256, 512, 512)  # rows 3-b .. 3-k


class Generator(nn.Module):
    def __init__(self, resolution=256, width_div=1, latent_size=512, in_channels=3):
        super().__init__()
        if resolution % 16 != 0:
            raise ValueError(f"resolution {resolution} not divisible by 16")
        self.grid = resolution // 16
        if latent_size % (self.grid * self.grid) != 0:
            raise ValueError(f"latent size {latent_size} not divisible by "
                             f"{self.grid}x{self.grid} injection grid")
        self.inject_channels = latent_size // (self.grid * self.grid)

        w = [scaled(c, width_div) for c in DOWN_WIDTHS]
        rows = {}
        down_labels = ("3-b", "3-c", "3-d", "3-e", "3-f", "3-g", "3-h", "3-i",
                       "3-j", "3-k")
        strides = (1, 1, 2, 1, 2, 1, 2, 1, 2, 1)
        prev = in_channels
        for label, c, s in zip(down_labels, w, strides):
            rows[label] = nn.Conv2d(prev, c, 3, stride=s, padding=1)
            prev = c
        # decoder: deconv, skip concat, fuse conv -- channel bookkeeping below
        rows["3-M"] = deconv2d(w[9] + self.inject_channels, scaled(256, width_div), 3)
        rows["3-O"] = nn.Conv2d(2 * scaled(256, width_div), scaled(256, width_div), 3, padding=1)
        rows["3-P"] = deconv2d(scaled(256, width_div), scaled(128, width_div), 3)
        rows["3-R"] = nn.Conv2d(2 * scaled(128, width_div), scaled(128, width_div), 3, padding=1)
        rows["3-S"] = deconv2d(scaled(128, width_div), scaled(64, width_div), 3)
        rows["3-U"] = nn.Conv2d(2 * scaled(64, width_div), scaled(64, width_div), 3, padding=1)
        rows["3-V"] = deconv2d(scaled(64, width_div), scaled(32, width_div), 3)
        rows["3-X"] = nn.Conv2d(2 * scaled(32, width_div), scaled(32, width_div), 3, padding=1)
        rows["3-Y"] = nn.Conv2d(scaled(32, width_div), in_channels, 3, padding=1)
        self.rows = nn.ModuleDict(rows)
        self.resolution = resolution
        self.latent_size = latent_size

    def forward(self, x_crop, v_latent, trace=None):
        n = x_crop.shape[0]
        if x_crop.shape[-1] != self.resolution or x_crop.shape[-2] != self.resolution:
            raise ValueError(f"generator built for {self.resolution}^2 input, "
                             f"got {tuple(x_crop.shape)}")
        if v_latent.shape[-1] != self.latent_size:
            raise ValueError(f"latent size {v_latent.shape[-1]} != {self.latent_size}")

        def conv(label, t):
            t = F.relu(self.rows[label](t))
            if trace is not None:
                trace[label] = nhwc_shape(t)
            return t

        t = conv("3-b", x_crop)
        skip_c = t = conv("3-c", t)
        t = conv("3-d", t)
        skip_e = t = conv("3-e", t)
        t = conv("3-f", t)
        skip_g = t = conv("3-g", t)
        t = conv("3-h", t)
        skip_i = t = conv("3-i", t)
        t = conv("3-j", t)
        v_e = conv("3-k", t)

        inject = v_latent.view(n, self.grid, self.grid, self.inject_channels)
        inject = inject.permute(0, 3, 1, 2)
        if trace is not None:
            trace["3-a"] = (n, self.grid, self.grid, self.inject_channels)

        t = torch.cat([v_e, inject], dim=1)
        if trace is not None:
            trace["3-L"] = nhwc_shape(t)
        t = conv("3-M", t)
        t = torch.cat([t, skip_i], dim=1)
        if trace is not None:
            trace["3-N"] = nhwc_shape(t)
        t = conv("3-O", t)
        t = conv("3-P", t)
        t = torch.cat([t, skip_g], dim=1)
        if trace is not None:
            trace["3-Q"] = nhwc_shape(t)
        t = conv("3-R", t)
        t = conv("3-S", t)
        t = torch.cat([t, skip_e], dim=1)
        if trace is not None:
            trace["3-T"] = nhwc_shape(t)
        t = conv("3-U", t)
        t = conv("3-V", t)
        t = torch.cat([t, skip_c], dim=1)
        if trace is not None:
            trace["3-W"] = nhwc_shape(t)
        t = conv("3-X", t)
        out = torch.sigmoid(self.rows["3-Y"](t))
        if trace is not None:
            trace["3-Y"] = nhwc_shape(out)
        return out


def weighted_reconstruction_loss(x_rec, x_real, w_fb):
    """Mean of |w_fb * (x_rec - x_real)| over every element; w_fb broadcasts
    across channels."""
    if x_rec.shape != x_real.shape:
        raise ValueError(f"shapes disagree: {tuple(x_rec.shape)} vs "
                         f"{tuple(x_real.shape)}")
    if w_fb.dim() == x_rec.dim() - 1:
        w_fb = w_fb.unsqueeze(1)  # (N, H, W) -> (N, 1, H, W)
    return torch.abs(w_fb * (x_rec - x_real)).mean()


def composite(x_rec, x_crop, hole_mask):
    """Final assembly: generated content inside the hole, original content
    everywhere else."""
    if hole_mask.dim() == x_rec.dim() - 1:
        hole_mask = hole_mask.unsqueeze(1)
    return hole_mask * x_rec + (1.0 - hole_mask) * x_crop
