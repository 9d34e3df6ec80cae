"""
Restoration generator: two parallel FGFF encoders and a Decoder.

    f_m = FGFF(I_m (+) I_c; theta_m)
    f_r = FGFF(I_r; theta_r)
    I_o = Decoder(f_m (+) f_r; theta_d)

Features are fused once, at the decoder entry. There are no
encoder-decoder skip connections.
"""

from typing import Optional

import torch
import torch.nn as nn

import config
from src.common.errors import ShapeError
from src.common.logger import get_logger
from src.model.blocks import HourGlass, make_fusion
from src.model.model_config import ModelConfig

logger = get_logger(__name__)

# I_m (3) + I_c (3)
MAIN_INPUT_CHANNELS = 6
REFERENCE_INPUT_CHANNELS = 3


def conv_block(in_channels: int, out_channels: int, stride: int = 1) -> nn.Sequential:
    """3x3 conv -> instance norm -> LeakyReLU."""
    return nn.Sequential(
        nn.Conv2d(in_channels, out_channels, kernel_size=3, stride=stride, padding=1),
        nn.InstanceNorm2d(out_channels, affine=True),
        nn.LeakyReLU(config.LEAKY_RELU_SLOPE),
    )


class FGFF(nn.Module):
    """
    Fine-Grained Feature Fusion encoder.

    Stem conv to ``base_channels``, then ``fgff_stages`` x (stride-2 conv ->
    fusion block), then one HourGlass at the bottleneck. With the defaults a
    (N, 6, 96, 96) input becomes (N, 256, 12, 12).
    """

    def __init__(self, in_channels: int, cfg: ModelConfig):
        super().__init__()
        self.in_channels = in_channels
        self.stem = conv_block(in_channels, cfg.base_channels)

        stages = []
        channels = cfg.base_channels
        for _ in range(cfg.fgff_stages):
            stages.append(nn.Sequential(
                conv_block(channels, cfg.encoder_channels, stride=2),
                make_fusion(cfg.encoder_channels, cfg.use_cf),
            ))
            channels = cfg.encoder_channels
        self.stages = nn.ModuleList(stages)
        self.hourglass = HourGlass(cfg.encoder_channels, cfg.use_cf)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.dim() != 4 or x.shape[1] != self.in_channels:
            raise ShapeError(
                f"FGFF expects (N, {self.in_channels}, H, W) input, got {tuple(x.shape)}"
            )
        x = self.stem(x)
        for stage in self.stages:
            x = stage(x)
        return self.hourglass(x)


class Decoder(nn.Module):
    """
    Mirrors the encoder: entry conv, ``fgff_stages`` x (transposed conv x2 ->
    fusion block), 3-channel projection, tanh rescaled to [0, 1].
    """

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.use_reference_branch = cfg.use_reference_branch
        branches = 2 if cfg.use_reference_branch else 1
        self.in_channels = cfg.bottleneck_channels * branches

        self.entry = conv_block(self.in_channels, cfg.encoder_channels)

        stages = []
        channels = cfg.encoder_channels
        for i in range(cfg.fgff_stages):
            out_channels = cfg.encoder_channels if i < cfg.fgff_stages - 1 else cfg.base_channels
            stages.append(nn.Sequential(
                nn.ConvTranspose2d(channels, out_channels, kernel_size=4, stride=2, padding=1),
                nn.InstanceNorm2d(out_channels, affine=True),
                nn.LeakyReLU(config.LEAKY_RELU_SLOPE),
                make_fusion(out_channels, cfg.use_cf),
            ))
            channels = out_channels
        self.stages = nn.ModuleList(stages)
        self.head = nn.Conv2d(cfg.base_channels, 3, kernel_size=3, padding=1)

    def forward(self, f_m: torch.Tensor, f_r: Optional[torch.Tensor] = None) -> torch.Tensor:
        if self.use_reference_branch:
            if f_r is None:
                raise ShapeError("Decoder with a reference branch needs f_r")
            if f_m.shape[0] != f_r.shape[0] or f_m.shape[-2:] != f_r.shape[-2:]:
                raise ShapeError(
                    f"f_m {tuple(f_m.shape)} and f_r {tuple(f_r.shape)} differ spatially"
                )
            x = torch.cat([f_m, f_r], dim=1)
        else:
            x = f_m

        if x.shape[1] != self.in_channels:
            raise ShapeError(f"Decoder expects {self.in_channels} entry channels, got {x.shape[1]}")

        x = self.entry(x)
        for stage in self.stages:
            x = stage(x)
        return (torch.tanh(self.head(x)) + 1.0) / 2.0


class HDTRGenerator(nn.Module):
    """
    Full generator.

    Args:
        cfg: Architecture configuration.

    Inputs are (N, 3, 96, 96) tensors in [0, 1]: masked mouth, contour and
    reference. The reference is ignored when the reference branch is off.
    """

    def __init__(self, cfg: Optional[ModelConfig] = None):
        super().__init__()
        self.cfg = cfg or ModelConfig()
        self.main_encoder = FGFF(MAIN_INPUT_CHANNELS, self.cfg)
        self.reference_encoder = (
            FGFF(REFERENCE_INPUT_CHANNELS, self.cfg) if self.cfg.use_reference_branch else None
        )
        self.decoder = Decoder(self.cfg)

    def forward(
        self,
        masked: torch.Tensor,
        contour: torch.Tensor,
        reference: Optional[torch.Tensor] = None,
    ) -> torch.Tensor:
        _check_image_batch(masked, "masked")
        _check_image_batch(contour, "contour")
        f_m = self.main_encoder(torch.cat([masked, contour], dim=1))

        f_r = None
        if self.reference_encoder is not None:
            if reference is None:
                raise ShapeError("Generator with a reference branch needs a reference image")
            _check_image_batch(reference, "reference")
            f_r = self.reference_encoder(reference)

        return self.decoder(f_m, f_r)


def count_parameters(module: nn.Module, trainable_only: bool = False) -> int:
    """Number of parameters in ``module``."""
    return sum(
        p.numel() for p in module.parameters()
        if p.requires_grad or not trainable_only
    )


def _check_image_batch(x: torch.Tensor, name: str) -> None:
    expected = (3, config.CROP_SIZE, config.CROP_SIZE)
    if x.dim() != 4 or tuple(x.shape[1:]) != expected:
        raise ShapeError(f"{name} must be (N, {', '.join(map(str, expected))}), got {tuple(x.shape)}")
