"""Convolution building blocks with Keras-style "same" spatial semantics.

Stride-2 convolutions here always produce ceil(H/2) x ceil(W/2) outputs and
stride-2 transposed convolutions exactly double spatial dims, so the stacks
stay shape-consistent at any input resolution, including tiny desk-scale ones.
"""

import torch.nn as nn
import torch.nn.functional as F


def ceil_div(n, d):
    return -(-n // d)


def halved(n, times=1):
    for _ in range(times):
        n = ceil_div(n, 2)
    return n


class SameConv2d(nn.Module):
    """Conv2d padded asymmetrically so output spatial size is ceil(input/stride)."""

    def __init__(self, in_channels, out_channels, kernel_size, stride=1):
        super().__init__()
        self.conv = nn.Conv2d(in_channels, out_channels, kernel_size, stride, padding=0)
        self.kernel_size = kernel_size
        self.stride = stride

    def forward(self, x):
        pads = []
        for dim in (3, 2):  # pad order: width first, then height
            size = x.shape[dim]
            total = max((ceil_div(size, self.stride) - 1) * self.stride
                        + self.kernel_size - size, 0)
            pads.extend([total // 2, total - total // 2])
        return self.conv(F.pad(x, pads))


def deconv2d(in_channels, out_channels, kernel_size):
    """Stride-2 transposed convolution that exactly doubles spatial dims."""
    # (H-1)*2 - 2p + k + op == 2H  =>  k=4: p=1, op=0;  k=3: p=1, op=1
    output_padding = {3: 1, 4: 0}[kernel_size]
    return nn.ConvTranspose2d(in_channels, out_channels, kernel_size, stride=2,
                              padding=1, output_padding=output_padding)


def nhwc_shape(t):
    """Shape of an NCHW tensor reported channels-last, as layer tables list them."""
    n, c, h, w = t.shape
    return (n, h, w, c)
