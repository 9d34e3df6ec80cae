"""
Frozen feature networks for the perceptual loss.

Two implementations are provided:
    - VGGFeatureExtractor: torchvision VGG16 with ImageNet weights, tapped
      after each of the first three pooling stages.
    - ToyFeatureExtractor: small seeded random convolutional stack with the
      same interface, so tests and toy runs need no downloaded weights.
"""

from abc import ABC, abstractmethod
from typing import List

import torch
import torch.nn as nn

import config
from src.common.errors import ConfigurationError
from src.common.logger import get_logger

logger = get_logger(__name__)

IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)

# vgg16.features slice ends, each one just past a MaxPool2d
VGG_POOL_SLICES = ((0, 5), (5, 10), (10, 17))


class FeatureExtractor(nn.Module, ABC):
    """
    Abstract frozen feature network.

    Subclasses build their layers and then call ``freeze()``. ``forward``
    returns the list of tapped feature maps for a (N, 3, H, W) batch in
    [0, 1].
    """

    name: str = "abstract"

    def freeze(self) -> None:
        for p in self.parameters():
            p.requires_grad_(False)
        self.eval()

    def train(self, mode: bool = True) -> "FeatureExtractor":
        # Always stays in eval mode
        return super().train(False)

    @abstractmethod
    def forward(self, img: torch.Tensor) -> List[torch.Tensor]:
        """Feature maps of ``img``, shallowest first."""


class VGGFeatureExtractor(FeatureExtractor):
    """
    VGG16 features at the first three pooling stages.

    Args:
        pretrained: Load ImageNet weights. Failing to obtain them raises
                    ConfigurationError rather than silently training with
                    random features.
    """

    name = "vgg16"

    def __init__(self, pretrained: bool = True):
        super().__init__()
        try:
            from torchvision.models import VGG16_Weights, vgg16
            weights = VGG16_Weights.IMAGENET1K_V1 if pretrained else None
            features = vgg16(weights=weights).features
        except Exception as exc:
            raise ConfigurationError(
                f"VGG16 perceptual extractor unavailable ({exc}); "
                f"use loss.extractor: toy for offline runs"
            ) from exc

        self.slices = nn.ModuleList(features[start:end] for start, end in VGG_POOL_SLICES)
        self.register_buffer("mean", torch.tensor(IMAGENET_MEAN).view(1, 3, 1, 1))
        self.register_buffer("std", torch.tensor(IMAGENET_STD).view(1, 3, 1, 1))
        self.freeze()

    def forward(self, img: torch.Tensor) -> List[torch.Tensor]:
        x = (img - self.mean) / self.std
        feats = []
        for block in self.slices:
            x = block(x)
            feats.append(x)
        return feats


class ToyFeatureExtractor(FeatureExtractor):
    """
    Seeded random extractor: ``stages`` x (3x3 conv -> ReLU -> maxpool 2).

    Weights are drawn from a private generator, so building one does not
    disturb the global torch RNG and equal seeds give equal extractors.
    """

    name = "toy"

    def __init__(self, stages: int = 3, width: int = 8, seed: int = config.TOY_EXTRACTOR_SEED):
        super().__init__()
        if stages < 1:
            raise ConfigurationError(f"ToyFeatureExtractor needs >= 1 stage, got {stages}")
        blocks = []
        in_channels = 3
        # Default layer init draws from the global RNG; it is overwritten below
        with torch.random.fork_rng(devices=[]):
            for i in range(stages):
                out_channels = width * (2 ** i)
                blocks.append(nn.Sequential(
                    nn.Conv2d(in_channels, out_channels, kernel_size=3, padding=1),
                    nn.ReLU(),
                    nn.MaxPool2d(2),
                ))
                in_channels = out_channels
        self.slices = nn.ModuleList(blocks)

        gen = torch.Generator().manual_seed(seed)
        with torch.no_grad():
            for p in self.parameters():
                fan_in = p[0].numel() if p.dim() > 1 else 1
                p.copy_(torch.randn(p.shape, generator=gen) / fan_in ** 0.5)
        self.freeze()

    def forward(self, img: torch.Tensor) -> List[torch.Tensor]:
        feats = []
        x = img
        for block in self.slices:
            x = block(x)
            feats.append(x)
        return feats


def build_feature_extractor(name: str = config.FEATURE_EXTRACTOR) -> FeatureExtractor:
    """
    Factory for perceptual extractors by config name.

    Raises:
        ConfigurationError: Unknown name or unavailable weights.
    """
    if name == "vgg16":
        extractor = VGGFeatureExtractor()
    elif name == "toy":
        extractor = ToyFeatureExtractor()
    else:
        raise ConfigurationError(f"Unknown feature extractor {name!r}; expected 'vgg16' or 'toy'")
    logger.info(f"Perceptual extractor: {extractor.name}")
    return extractor
