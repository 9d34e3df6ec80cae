"""
Training objectives.

Least-squares adversarial terms for both networks, L1 + squared-L2
reconstruction, perceptual feature distance and the weighted generator
total:

    L_D   = 1/2 E[(D(I_g) - 1)^2] + 1/2 E[D(I_o)^2]
    L_adv = 1/2 E[(D(I_o) - 1)^2]
    L_rec = E|I_g - I_o| + E(I_g - I_o)^2
    L_perc = sum_l E(phi_l(I_g) - phi_l(I_o))^2
    L     = lambda_gan * L_adv + lambda_perc * L_perc + lambda_rec * L_rec

All norms are means over elements.
"""

from dataclasses import asdict, dataclass
from typing import Any, Dict, Optional, Union

import torch

import config
from src.common.errors import ConfigurationError, ShapeError

Number = Union[float, torch.Tensor]


@dataclass(frozen=True)
class LossWeights:
    """Generator loss weights. All nonnegative, at least one positive."""
    lambda_gan: float = config.LAMBDA_GAN
    lambda_perc: float = config.LAMBDA_PERC
    lambda_rec: float = config.LAMBDA_REC

    def __post_init__(self):
        for name, value in asdict(self).items():
            if value < 0:
                raise ConfigurationError(f"{name} must be nonnegative, got {value}")
        if not any(v > 0 for v in asdict(self).values()):
            raise ConfigurationError("At least one loss weight must be positive")

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)


@dataclass
class GeneratorLossParts:
    """Generator-side loss terms of one step."""
    g_adv: Number
    perc: Number
    rec: Number


def d_loss(d_real: torch.Tensor, d_fake: torch.Tensor) -> torch.Tensor:
    """
    Discriminator objective.

    ``d_fake`` must come from a generator output detached from the
    generator graph.

    Raises:
        ShapeError: Maps differ in shape.
    """
    _check_same_shape(d_real, d_fake, "d_real", "d_fake")
    return 0.5 * torch.mean((d_real - 1.0) ** 2) + 0.5 * torch.mean(d_fake ** 2)


def g_adv_loss(d_fake: torch.Tensor) -> torch.Tensor:
    """Generator adversarial term; gradients flow back into the generator."""
    return 0.5 * torch.mean((d_fake - 1.0) ** 2)


def rec_loss(target: torch.Tensor, output: torch.Tensor) -> torch.Tensor:
    """L1 + squared-L2 reconstruction."""
    _check_same_shape(target, output, "target", "output")
    diff = target - output
    return torch.mean(torch.abs(diff)) + torch.mean(diff ** 2)


def perc_loss(target: torch.Tensor, output: torch.Tensor, extractor: Optional[Any]) -> torch.Tensor:
    """
    Sum over tapped layers of the mean squared feature difference.

    Raises:
        ConfigurationError: No extractor supplied.
        ShapeError: Images differ in shape.
    """
    if extractor is None:
        raise ConfigurationError("Perceptual loss requested without a feature extractor")
    _check_same_shape(target, output, "target", "output")

    total = output.new_zeros(())
    for f_t, f_o in zip(extractor(target), extractor(output)):
        total = total + torch.mean((f_t - f_o) ** 2)
    return total


def total_g_loss(parts: GeneratorLossParts, weights: LossWeights) -> Number:
    """Weighted generator objective. A zero weight drops its term entirely."""
    if min(weights.lambda_gan, weights.lambda_perc, weights.lambda_rec) < 0:
        raise ConfigurationError("Loss weights must be nonnegative")
    total: Number = 0.0
    for weight, term in (
        (weights.lambda_gan, parts.g_adv),
        (weights.lambda_perc, parts.perc),
        (weights.lambda_rec, parts.rec),
    ):
        if weight > 0:
            total = total + weight * term
    return total


def _check_same_shape(a: torch.Tensor, b: torch.Tensor, name_a: str, name_b: str) -> None:
    if a.shape != b.shape:
        raise ShapeError(f"{name_a} {tuple(a.shape)} and {name_b} {tuple(b.shape)} differ in shape")
