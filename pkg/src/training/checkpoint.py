"""
Versioned training checkpoints.

A checkpoint is a torch-serialized dict tagged with a magic string. Files
are written to a temporary name and moved into place, so an interrupted
save never leaves a partial checkpoint under the final name.
"""

import os
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import torch

import config
from src.common.errors import CheckpointCorruptError, CheckpointError, CheckpointVersionError
from src.common.logger import get_logger
from src.model.generator import HDTRGenerator
from src.model.model_config import ModelConfig

logger = get_logger(__name__)

_REQUIRED_KEYS = ("magic", "step", "model_config", "generator")


@dataclass
class Checkpoint:
    """
    Attributes:
        step: Completed optimisation steps.
        model_config: Architecture the state dicts belong to.
        generator: Generator state dict.
        discriminator: Discriminator state dict (None for export-only files).
        optim_g, optim_d: Optimizer state dicts (None for export-only files).
        train_config: Nested training config the run used.
    """
    step: int
    model_config: ModelConfig
    generator: Dict[str, torch.Tensor]
    discriminator: Optional[Dict[str, torch.Tensor]] = None
    optim_g: Optional[Dict[str, Any]] = None
    optim_d: Optional[Dict[str, Any]] = None
    train_config: Dict[str, Any] = field(default_factory=dict)


def save_checkpoint(path: str, ckpt: Checkpoint) -> str:
    """Atomically write ``ckpt`` to ``path``."""
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)

    payload = {
        "magic": config.CHECKPOINT_MAGIC,
        "step": int(ckpt.step),
        "model_config": ckpt.model_config.to_dict(),
        "generator": ckpt.generator,
        "discriminator": ckpt.discriminator,
        "optim_g": ckpt.optim_g,
        "optim_d": ckpt.optim_d,
        "train_config": ckpt.train_config,
    }
    tmp_path = f"{path}.tmp"
    torch.save(payload, tmp_path)
    os.replace(tmp_path, path)
    logger.info(f"Checkpoint saved: {path} (step {ckpt.step})")
    return path


def load_checkpoint(path: str, map_location: str = "cpu") -> Checkpoint:
    """
    Read a checkpoint written by ``save_checkpoint``.

    Raises:
        CheckpointError: File missing.
        CheckpointVersionError: Magic string absent or different.
        CheckpointCorruptError: Truncated or undecodable file, missing fields.
    """
    if not os.path.isfile(path):
        raise CheckpointError(f"Checkpoint not found: {path}")
    try:
        payload = torch.load(path, map_location=map_location, weights_only=True)
    except Exception as exc:
        raise CheckpointCorruptError(f"Cannot decode checkpoint {path}: {exc}") from exc

    if not isinstance(payload, dict) or payload.get("magic") != config.CHECKPOINT_MAGIC:
        found = payload.get("magic") if isinstance(payload, dict) else type(payload).__name__
        raise CheckpointVersionError(
            f"Unsupported checkpoint format in {path}: expected magic "
            f"{config.CHECKPOINT_MAGIC!r}, found {found!r}"
        )
    missing = [k for k in _REQUIRED_KEYS if k not in payload]
    if missing:
        raise CheckpointCorruptError(f"Checkpoint {path} lacks fields {missing}")

    try:
        model_config = ModelConfig.from_dict(payload["model_config"])
    except Exception as exc:
        raise CheckpointCorruptError(f"Invalid model config in {path}: {exc}") from exc

    return Checkpoint(
        step=int(payload["step"]),
        model_config=model_config,
        generator=payload["generator"],
        discriminator=payload.get("discriminator"),
        optim_g=payload.get("optim_g"),
        optim_d=payload.get("optim_d"),
        train_config=payload.get("train_config") or {},
    )


def load_generator(path: str, device: str = "cpu") -> HDTRGenerator:
    """Frozen generator in eval mode, built from a checkpoint."""
    ckpt = load_checkpoint(path, map_location=device)
    generator = HDTRGenerator(ckpt.model_config)
    try:
        generator.load_state_dict(ckpt.generator, strict=True)
    except RuntimeError as exc:
        raise CheckpointCorruptError(f"Generator weights in {path} do not match: {exc}") from exc
    generator.to(device).eval()
    for p in generator.parameters():
        p.requires_grad_(False)
    logger.info(f"Generator loaded from {path} (step {ckpt.step})")
    return generator
