"""
Training configuration and its YAML file format.

Example file (every key optional, defaults from config.py):

    seed: 42
    model:
      base_channels: 64
      fgff_stages: 3
    loss:
      lambda_gan: 0.1
      lambda_perc: 1.0
      lambda_rec: 10.0
      extractor: vgg16
    optim:
      learning_rate: 1.0e-4
      batch_size: 12
      steps: 1000
    data:
      frames: null          # frame directory or list of them; null -> synthetic toy video
      landmarks: null       # sidecar directory or list, paired with frames
      toy_frames: 16
      toy_videos: 1
      deterministic: false
    ablations:
      use_cf: true
      use_reference_branch: true
      use_perc_loss: true
    output:
      dir: results/train
      checkpoint_every: 500
      resume: null
"""

import os
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Dict, List, Optional, Tuple, Union

import yaml

import config
from src.common.errors import ConfigurationError
from src.common.logger import get_logger
from src.common.seeding import resolve_seed
from src.losses.objectives import LossWeights
from src.model.model_config import ModelConfig

logger = get_logger(__name__)


def _as_list(value: Union[str, List[str]]) -> List[str]:
    return [value] if isinstance(value, str) else list(value)


@dataclass(frozen=True)
class Ablations:
    """Architectural and objective ablation switches."""
    use_cf: bool = True
    use_reference_branch: bool = True
    use_perc_loss: bool = True


@dataclass(frozen=True)
class DataConfig:
    """
    Where training frames come from.

    ``frames`` and ``landmarks`` are one directory each, or equally long
    lists of directories (one pair per video). Both None selects the
    synthetic toy video.
    """
    frames: Optional[Union[str, List[str]]] = None
    landmarks: Optional[Union[str, List[str]]] = None
    toy_frames: int = config.TOY_FRAMES
    toy_videos: int = 1
    # Serial loading, deterministic cuDNN
    deterministic: bool = False

    def sources(self) -> List[Tuple[str, str]]:
        """(frame directory, landmark directory) pairs, empty for the toy video."""
        if self.frames is None or self.landmarks is None:
            return []
        return list(zip(_as_list(self.frames), _as_list(self.landmarks)))


@dataclass(frozen=True)
class OutputConfig:
    dir: str = os.path.join(config.RESULTS_DIR, "train")
    checkpoint_every: int = config.CHECKPOINT_EVERY
    resume: Optional[str] = None


@dataclass(frozen=True)
class TrainConfig:
    """
    Everything a training run needs.

    Attributes:
        learning_rate: Adam step size (> 0).
        batch_size: Samples per step (>= 1).
        steps: Total optimisation steps.
        weights: Configured loss weights (before ablations).
        ablations: CF / reference branch / perceptual loss switches.
        seed: RNG seed after the HDTR_SEED override.
        base_channels, fgff_stages, discriminator_channels,
        discriminator_stages: Architecture widths and depths.
        extractor: Perceptual extractor name ("vgg16" or "toy").
        betas, eps: Adam hyperparameters.
        data: Frame source.
        output: Checkpoint / log location and resume path.
    """
    learning_rate: float = config.LEARNING_RATE
    batch_size: int = config.BATCH_SIZE
    steps: int = config.TRAIN_STEPS
    weights: LossWeights = field(default_factory=LossWeights)
    ablations: Ablations = field(default_factory=Ablations)
    seed: int = config.SEED
    base_channels: int = config.BASE_CHANNELS
    fgff_stages: int = config.FGFF_STAGES
    discriminator_channels: int = config.BASE_CHANNELS
    discriminator_stages: int = config.DISCRIMINATOR_STAGES
    extractor: str = config.FEATURE_EXTRACTOR
    betas: Tuple[float, float] = config.ADAM_BETAS
    eps: float = config.ADAM_EPS
    data: DataConfig = field(default_factory=DataConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ConfigurationError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.batch_size < 1:
            raise ConfigurationError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.steps < 0:
            raise ConfigurationError(f"steps must be >= 0, got {self.steps}")
        if self.output.checkpoint_every < 1:
            raise ConfigurationError("output.checkpoint_every must be >= 1")
        if self.data.toy_frames < 2 or self.data.toy_videos < 1:
            raise ConfigurationError("data.toy_frames must be >= 2 and data.toy_videos >= 1")
        if (self.data.frames is None) != (self.data.landmarks is None):
            raise ConfigurationError("data.frames and data.landmarks must be given together")
        if self.data.frames is not None:
            n_frames, n_landmarks = len(_as_list(self.data.frames)), len(_as_list(self.data.landmarks))
            if n_frames == 0 or n_frames != n_landmarks:
                raise ConfigurationError(
                    f"data.frames and data.landmarks must list the same number of directories "
                    f"(got {n_frames} and {n_landmarks})"
                )
        # Fail early on a bad architecture or on all-zero effective weights
        self.model_config()
        self.effective_weights()

    def model_config(self) -> ModelConfig:
        return ModelConfig(
            base_channels=self.base_channels,
            fgff_stages=self.fgff_stages,
            use_cf=self.ablations.use_cf,
            use_reference_branch=self.ablations.use_reference_branch,
            discriminator_channels=self.discriminator_channels,
            discriminator_stages=self.discriminator_stages,
        )

    def effective_weights(self) -> LossWeights:
        """Loss weights with the perceptual ablation applied."""
        if self.ablations.use_perc_loss:
            return self.weights
        return replace(self.weights, lambda_perc=0.0)

    def to_dict(self) -> Dict[str, Any]:
        """Nested dict in the YAML section layout."""
        return {
            "seed": self.seed,
            "model": {
                "base_channels": self.base_channels,
                "fgff_stages": self.fgff_stages,
                "discriminator_channels": self.discriminator_channels,
                "discriminator_stages": self.discriminator_stages,
            },
            "loss": {**self.weights.to_dict(), "extractor": self.extractor},
            "optim": {
                "learning_rate": self.learning_rate,
                "batch_size": self.batch_size,
                "steps": self.steps,
                "betas": list(self.betas),
                "eps": self.eps,
            },
            "data": asdict(self.data),
            "ablations": asdict(self.ablations),
            "output": asdict(self.output),
        }


_SECTIONS = {
    "model": {"base_channels", "fgff_stages", "discriminator_channels", "discriminator_stages"},
    "loss": {"lambda_gan", "lambda_perc", "lambda_rec", "extractor"},
    "optim": {"learning_rate", "batch_size", "steps", "betas", "eps"},
    "data": set(DataConfig.__dataclass_fields__),
    "ablations": set(Ablations.__dataclass_fields__),
    "output": set(OutputConfig.__dataclass_fields__),
}


def train_config_from_dict(values: Optional[Dict[str, Any]], apply_env: bool = True) -> TrainConfig:
    """
    Build a TrainConfig from the nested section layout.

    Args:
        values: Parsed YAML mapping (None means all defaults).
        apply_env: Apply the HDTR_SEED override.

    Raises:
        ConfigurationError: Unknown section or key, or invalid value.
    """
    values = dict(values or {})
    unknown = set(values) - set(_SECTIONS) - {"seed"}
    if unknown:
        raise ConfigurationError(f"Unknown config sections: {sorted(unknown)}")

    sections: Dict[str, Dict[str, Any]] = {}
    for name, allowed in _SECTIONS.items():
        section = values.get(name) or {}
        if not isinstance(section, dict):
            raise ConfigurationError(f"Config section '{name}' must be a mapping")
        bad = set(section) - allowed
        if bad:
            raise ConfigurationError(f"Unknown keys in '{name}': {sorted(bad)}")
        sections[name] = section

    loss = dict(sections["loss"])
    extractor = loss.pop("extractor", config.FEATURE_EXTRACTOR)
    optim = dict(sections["optim"])
    try:
        # PyYAML reads "1e-4" (no dot) as a string
        for key in ("learning_rate", "eps"):
            if key in optim:
                optim[key] = float(optim[key])
        if "betas" in optim:
            optim["betas"] = tuple(float(b) for b in optim["betas"])
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"Invalid optim value: {exc}") from exc

    seed = int(values.get("seed", config.SEED))
    if apply_env:
        seed = resolve_seed(seed)

    try:
        return TrainConfig(
            weights=LossWeights(**{k: float(v) for k, v in loss.items()}),
            ablations=Ablations(**sections["ablations"]),
            data=DataConfig(**sections["data"]),
            output=OutputConfig(**sections["output"]),
            extractor=extractor,
            seed=seed,
            **sections["model"],
            **optim,
        )
    except TypeError as exc:
        raise ConfigurationError(f"Invalid training config: {exc}") from exc


def load_train_config(path: str) -> TrainConfig:
    """
    Load a YAML training config.

    Raises:
        ConfigurationError: Missing file, YAML syntax error or invalid content.
    """
    if not os.path.isfile(path):
        raise ConfigurationError(f"Training config not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            values = yaml.safe_load(f)
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"Cannot parse {path}: {exc}") from exc
    if values is not None and not isinstance(values, dict):
        raise ConfigurationError(f"{path} must hold a mapping at the top level")

    cfg = train_config_from_dict(values)
    logger.info(f"Loaded training config {path} (seed={cfg.seed}, steps={cfg.steps})")
    return cfg
