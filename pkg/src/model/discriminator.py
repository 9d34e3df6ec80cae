"""
Patch discriminator emitting a grid of unbounded realness scores
(least-squares GAN convention).
"""

from typing import Optional

import torch
import torch.nn as nn

import config
from src.common.errors import ShapeError
from src.model.model_config import ModelConfig


class PatchDiscriminator(nn.Module):
    """
    Stride-2 conv stages (4x4 kernels), instance norm after the first,
    then a 3x3 projection to one channel. Default: (N, 3, 96, 96) ->
    (N, 1, 6, 6).
    """

    def __init__(self, cfg: Optional[ModelConfig] = None):
        super().__init__()
        cfg = cfg or ModelConfig()
        channels = cfg.discriminator_channels
        cap = 8 * cfg.discriminator_channels

        layers = [
            nn.Conv2d(3, channels, kernel_size=4, stride=2, padding=1),
            nn.LeakyReLU(config.LEAKY_RELU_SLOPE),
        ]
        for _ in range(cfg.discriminator_stages - 1):
            out_channels = min(channels * 2, cap)
            layers += [
                nn.Conv2d(channels, out_channels, kernel_size=4, stride=2, padding=1),
                nn.InstanceNorm2d(out_channels, affine=True),
                nn.LeakyReLU(config.LEAKY_RELU_SLOPE),
            ]
            channels = out_channels

        self.features = nn.Sequential(*layers)
        self.head = nn.Conv2d(channels, 1, kernel_size=3, padding=1)

    def forward(self, img: torch.Tensor) -> torch.Tensor:
        if img.dim() != 4 or img.shape[1] != 3:
            raise ShapeError(f"Discriminator expects (N, 3, H, W), got {tuple(img.shape)}")
        # [0, 1] -> [-1, 1]
        return self.head(self.features(img * 2.0 - 1.0))
