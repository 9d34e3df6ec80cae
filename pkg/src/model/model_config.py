"""
Architecture configuration for the generator and discriminator.
"""

from dataclasses import asdict, dataclass
from typing import Any, Dict

import config
from src.common.errors import ConfigurationError


@dataclass(frozen=True)
class ModelConfig:
    """
    Channel widths, depths and ablation switches.

    Attributes:
        base_channels: Stem width of each FGFF encoder. Must be divisible
                       by 4 (CF splits channels into halves and quarters).
        fgff_stages: Stride-2 stages per encoder. The bottleneck must stay
                     divisible by 4 for the HourGlass block, so at most 3
                     stages at 96x96.
        use_cf: False replaces every CF block with one convolution.
        use_reference_branch: False drops the reference FGFF encoder.
        output_activation: Output mapping into [0, 1].
        discriminator_channels: Width of the first discriminator stage.
        discriminator_stages: Stride-2 stages of the patch discriminator.
    """
    base_channels: int = config.BASE_CHANNELS
    fgff_stages: int = config.FGFF_STAGES
    use_cf: bool = True
    use_reference_branch: bool = True
    output_activation: str = "tanh_rescaled"
    discriminator_channels: int = config.BASE_CHANNELS
    discriminator_stages: int = config.DISCRIMINATOR_STAGES

    def __post_init__(self):
        if self.base_channels <= 0 or self.base_channels % 4 != 0:
            raise ConfigurationError(
                f"base_channels must be a positive multiple of 4, got {self.base_channels}"
            )
        if self.fgff_stages < 1:
            raise ConfigurationError(f"fgff_stages must be >= 1, got {self.fgff_stages}")
        if self.bottleneck_size % 4 != 0:
            raise ConfigurationError(
                f"fgff_stages={self.fgff_stages} leaves a {self.bottleneck_size}x"
                f"{self.bottleneck_size} bottleneck; HourGlass needs a multiple of 4"
            )
        if self.output_activation not in config.OUTPUT_ACTIVATIONS:
            raise ConfigurationError(
                f"Unknown output_activation {self.output_activation!r}; "
                f"expected one of {config.OUTPUT_ACTIVATIONS}"
            )
        if self.discriminator_channels <= 0:
            raise ConfigurationError("discriminator_channels must be positive")
        if self.discriminator_stages < 1 or config.CROP_SIZE % (2 ** self.discriminator_stages) != 0:
            raise ConfigurationError(
                f"discriminator_stages={self.discriminator_stages} does not divide "
                f"a {config.CROP_SIZE}px input"
            )

    @property
    def encoder_channels(self) -> int:
        """Width after the first downsampling stage (kept for later stages)."""
        return 2 * self.base_channels

    @property
    def bottleneck_channels(self) -> int:
        """FGFF output width (HourGlass doubles the encoder width)."""
        return 2 * self.encoder_channels

    @property
    def bottleneck_size(self) -> int:
        return config.CROP_SIZE // (2 ** self.fgff_stages)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, values: Dict[str, Any]) -> "ModelConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(values) - known
        if unknown:
            raise ConfigurationError(f"Unknown model config keys: {sorted(unknown)}")
        return cls(**values)
