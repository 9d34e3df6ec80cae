"""
Feature fusion building blocks: Channel Fusion (CF) and HourGlass.
"""

from typing import List, Tuple

import torch
import torch.nn as nn

import config
from src.common.errors import ConfigurationError, ShapeError


class ChannelFusion(nn.Module):
    """
    Channel Fusion block.

    Three successive 3x3 convolutions emit C/2, C/4 and C/4 channels; their
    outputs are concatenated back to C channels. Spatial size is unchanged.
    No normalization inside the block, so zero input with zero biases stays
    zero.
    """

    def __init__(self, channels: int, slope: float = config.LEAKY_RELU_SLOPE):
        super().__init__()
        if channels <= 0 or channels % 4 != 0:
            raise ConfigurationError(f"ChannelFusion needs channels divisible by 4, got {channels}")
        self.channels = channels
        half, quarter = channels // 2, channels // 4
        self.conv_half = nn.Conv2d(channels, half, kernel_size=3, padding=1)
        self.conv_quarter_a = nn.Conv2d(half, quarter, kernel_size=3, padding=1)
        self.conv_quarter_b = nn.Conv2d(quarter, quarter, kernel_size=3, padding=1)
        self.act = nn.LeakyReLU(slope)

    @property
    def widths(self) -> Tuple[int, int, int]:
        return (
            self.conv_half.out_channels,
            self.conv_quarter_a.out_channels,
            self.conv_quarter_b.out_channels,
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        _check_channels(x, self.channels, "ChannelFusion")
        a = self.act(self.conv_half(x))
        b = self.act(self.conv_quarter_a(a))
        c = self.act(self.conv_quarter_b(b))
        return torch.cat([a, b, c], dim=1)


class ConvFusion(nn.Module):
    """Single channel-preserving convolution standing in for CF (w/o CF ablation)."""

    def __init__(self, channels: int, slope: float = config.LEAKY_RELU_SLOPE):
        super().__init__()
        self.channels = channels
        self.conv = nn.Conv2d(channels, channels, kernel_size=3, padding=1)
        self.act = nn.LeakyReLU(slope)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        _check_channels(x, self.channels, "ConvFusion")
        return self.act(self.conv(x))


def make_fusion(channels: int, use_cf: bool = True) -> nn.Module:
    """CF block, or its plain-convolution replacement when ``use_cf`` is off."""
    return ChannelFusion(channels) if use_cf else ConvFusion(channels)


class HourGlass(nn.Module):
    """
    Two-path HourGlass block.

    Top path: one fusion block at full resolution. Bottom path: (maxpool x2
    -> fusion) twice, nearest-neighbour upsampling x4 and a 3x3 conv. The
    paths are concatenated, so the output has 2C channels at the input
    resolution.
    """

    def __init__(self, channels: int, use_cf: bool = True, slope: float = config.LEAKY_RELU_SLOPE):
        super().__init__()
        self.channels = channels
        self.top = make_fusion(channels, use_cf)
        self.pool = nn.MaxPool2d(kernel_size=2, stride=2)
        self.low1 = make_fusion(channels, use_cf)
        self.low2 = make_fusion(channels, use_cf)
        self.upsample = nn.Upsample(scale_factor=4, mode="nearest")
        self.up_conv = nn.Conv2d(channels, channels, kernel_size=3, padding=1)
        self.act = nn.LeakyReLU(slope)

    def bottom_path(self, x: torch.Tensor) -> List[torch.Tensor]:
        """Intermediate bottom-path tensors: [after first CF, after second CF, upsampled]."""
        low1 = self.low1(self.pool(x))
        low2 = self.low2(self.pool(low1))
        up = self.act(self.up_conv(self.upsample(low2)))
        return [low1, low2, up]

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        _check_channels(x, self.channels, "HourGlass")
        height, width = x.shape[-2:]
        if height % 4 != 0 or width % 4 != 0:
            raise ConfigurationError(
                f"HourGlass needs spatial dims divisible by 4, got {height}x{width}"
            )
        top = self.top(x)
        bottom = self.bottom_path(x)[-1]
        return torch.cat([top, bottom], dim=1)


def _check_channels(x: torch.Tensor, expected: int, name: str) -> None:
    if x.dim() != 4 or x.shape[1] != expected:
        raise ShapeError(f"{name} expects (N, {expected}, H, W), got {tuple(x.shape)}")
