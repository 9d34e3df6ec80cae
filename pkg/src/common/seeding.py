"""
Reproducible seeding.
"""

import os
import random
from typing import Optional

import numpy as np
import torch

import config
from src.common.errors import ConfigurationError
from src.common.logger import get_logger

logger = get_logger(__name__)


def resolve_seed(seed: int) -> int:
    """
    Apply the HDTR_SEED environment override to a configured seed.

    Args:
        seed: Seed from the config file.

    Returns:
        The environment value if set, otherwise ``seed``.

    Raises:
        ConfigurationError: If the environment value is not an integer.
    """
    raw = os.environ.get(config.SEED_ENV_VAR)
    if raw is None or raw.strip() == "":
        return int(seed)
    try:
        value = int(raw)
    except ValueError:
        raise ConfigurationError(f"{config.SEED_ENV_VAR} must be an integer, got {raw!r}") from None
    logger.info(f"Seed overridden by {config.SEED_ENV_VAR}: {seed} -> {value}")
    return value


def set_seed(seed: int, deterministic: bool = False) -> None:
    """Seed python, numpy and torch RNGs."""
    random.seed(seed)
    np.random.seed(seed)
    torch.manual_seed(seed)
    if torch.cuda.is_available():
        torch.cuda.manual_seed_all(seed)
    if deterministic:
        torch.backends.cudnn.deterministic = True
        torch.backends.cudnn.benchmark = False


def make_rng(seed: Optional[int]) -> np.random.Generator:
    """Create an independent numpy generator (None -> fresh entropy)."""
    return np.random.default_rng(seed)
