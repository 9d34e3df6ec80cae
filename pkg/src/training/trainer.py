"""
Adversarial training loop.

Each step updates the discriminator once on L_D (generator output
detached), then the generator once on the weighted generator objective.
Steps, losses and wall time are appended to a JSON-lines training log.
"""

import json
import os
import time
from dataclasses import asdict, dataclass
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np
import torch
import torch.nn as nn
from tqdm import tqdm

from src.common.data_loader import FrameStore, load_frame_store
from src.common.errors import NonFiniteLossError
from src.common.logger import get_logger
from src.common.seeding import make_rng, set_seed
from src.losses.feature_extractor import FeatureExtractor, build_feature_extractor
from src.losses.objectives import GeneratorLossParts, d_loss, g_adv_loss, perc_loss, rec_loss, total_g_loss
from src.model.discriminator import PatchDiscriminator
from src.model.generator import HDTRGenerator
from src.training.checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from src.training.config import TrainConfig
from src.training.dataset import Batch, iterate_batches, prefetch
from src.training.synthetic import toy_store_from_config

logger = get_logger(__name__)

Optimizers = Tuple[torch.optim.Optimizer, torch.optim.Optimizer]


@dataclass
class StepMetrics:
    """Scalar losses of one training step."""
    step: int
    d_loss: float
    g_adv: float
    perc: float
    rec: float
    g_total: float

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)


# =============================================================================
# One step
# =============================================================================

def train_step(
    batch: Batch,
    generator: HDTRGenerator,
    discriminator: PatchDiscriminator,
    optimizers: Optimizers,
    cfg: TrainConfig,
    extractor: Optional[FeatureExtractor] = None,
    step: int = 0,
    dump_dir: Optional[str] = None,
) -> StepMetrics:
    """
    One discriminator update followed by one generator update.

    Args:
        batch: Stacked samples on the models' device.
        generator: Generator (trained).
        discriminator: Patch discriminator (trained).
        optimizers: (generator optimizer, discriminator optimizer).
        cfg: Supplies the effective loss weights.
        extractor: Perceptual extractor; required when lambda_perc > 0.
        step: Step number for the log and diagnostics.
        dump_dir: Where to save the batch if a loss turns non-finite.

    Returns:
        StepMetrics with every loss term.

    Raises:
        NonFiniteLossError: A loss became NaN/Inf. No update of that
                            network is applied.
    """
    opt_g, opt_d = optimizers
    weights = cfg.effective_weights()
    generator.train()
    discriminator.train()

    output = generator(batch.masked, batch.contour, batch.reference)

    # Discriminator: real crops vs. detached generator output
    _set_requires_grad(discriminator, True)
    opt_d.zero_grad(set_to_none=True)
    loss_d = d_loss(discriminator(batch.target), discriminator(output.detach()))
    _check_finite(loss_d, "d_loss", step, batch, output, dump_dir)
    loss_d.backward()
    opt_d.step()

    # Generator: discriminator frozen, gradients flow through D into G only
    _set_requires_grad(discriminator, False)
    try:
        opt_g.zero_grad(set_to_none=True)
        if weights.lambda_gan > 0:
            loss_adv = g_adv_loss(discriminator(output))
        else:
            with torch.no_grad():
                loss_adv = g_adv_loss(discriminator(output))
        loss_rec = rec_loss(batch.target, output)
        if weights.lambda_perc > 0:
            loss_perc = perc_loss(batch.target, output, extractor)
        else:
            loss_perc = output.new_zeros(())

        loss_g = total_g_loss(GeneratorLossParts(g_adv=loss_adv, perc=loss_perc, rec=loss_rec), weights)
        for name, value in (("g_adv", loss_adv), ("perc", loss_perc), ("rec", loss_rec), ("g_total", loss_g)):
            _check_finite(value, name, step, batch, output, dump_dir)
        loss_g.backward()
        opt_g.step()
    finally:
        _set_requires_grad(discriminator, True)

    return StepMetrics(
        step=step,
        d_loss=float(loss_d.item()),
        g_adv=float(loss_adv.item()),
        perc=float(loss_perc.item()),
        rec=float(loss_rec.item()),
        g_total=float(loss_g.item()),
    )


def _set_requires_grad(module: nn.Module, flag: bool) -> None:
    for p in module.parameters():
        p.requires_grad_(flag)


def _check_finite(
    value: torch.Tensor,
    name: str,
    step: int,
    batch: Batch,
    output: torch.Tensor,
    dump_dir: Optional[str],
) -> None:
    if torch.isfinite(value).all():
        return

    per_sample = torch.stack([
        torch.isfinite(t).flatten(1).all(dim=1)
        for t in (batch.masked, batch.contour, batch.reference, batch.target, output.detach())
    ]).all(dim=0)
    offending = [batch.indices[i] for i in range(len(batch)) if not bool(per_sample[i])]

    dump_path = None
    if dump_dir is not None:
        os.makedirs(dump_dir, exist_ok=True)
        dump_path = os.path.join(dump_dir, f"nonfinite_step{step:06d}.pt")
        torch.save({
            "step": step,
            "loss": name,
            "indices": batch.indices,
            "masked": batch.masked.detach().cpu(),
            "contour": batch.contour.detach().cpu(),
            "reference": batch.reference.detach().cpu(),
            "target": batch.target.detach().cpu(),
            "output": output.detach().cpu(),
        }, dump_path)

    logger.error(f"Non-finite {name} at step {step}, batch indices {offending}")
    raise NonFiniteLossError(step, name, offending, dump_path)


# =============================================================================
# Trainer
# =============================================================================

class Trainer:
    """
    Owns models, optimizers, data stream and output files of a run.

    Args:
        cfg: Training configuration.
        store: Frame store; default is the configured frame directory or a
               synthetic toy video.
        device: Torch device name.
        progress: Show a tqdm progress bar.
    """

    def __init__(
        self,
        cfg: TrainConfig,
        store: Optional[FrameStore] = None,
        device: Optional[str] = None,
        progress: bool = True,
    ):
        self.cfg = cfg
        self.device = torch.device(device or ("cuda" if torch.cuda.is_available() else "cpu"))
        self.progress = progress

        set_seed(cfg.seed, deterministic=cfg.data.deterministic)
        self.rng: np.random.Generator = make_rng(cfg.seed)
        self.store = store if store is not None else self._load_store()

        model_config = cfg.model_config()
        self.generator = HDTRGenerator(model_config).to(self.device)
        self.discriminator = PatchDiscriminator(model_config).to(self.device)
        self.extractor: Optional[FeatureExtractor] = None
        if cfg.effective_weights().lambda_perc > 0:
            self.extractor = build_feature_extractor(cfg.extractor).to(self.device)

        self.opt_g = torch.optim.Adam(
            self.generator.parameters(), lr=cfg.learning_rate, betas=cfg.betas, eps=cfg.eps
        )
        self.opt_d = torch.optim.Adam(
            self.discriminator.parameters(), lr=cfg.learning_rate, betas=cfg.betas, eps=cfg.eps
        )
        self.step = 0
        self._batches: Optional[Iterator[Batch]] = None

        os.makedirs(cfg.output.dir, exist_ok=True)
        self.log_path = os.path.join(cfg.output.dir, "train_log.jsonl")

        if cfg.output.resume:
            self.resume(cfg.output.resume)

    def _load_store(self) -> FrameStore:
        data = self.cfg.data
        sources = data.sources()
        if len(sources) == 1:
            return load_frame_store(*sources[0])
        if sources:
            # Full paths as video ids: basenames like "frames" collide
            return FrameStore.concat([
                load_frame_store(frames, landmarks, video=os.path.normpath(frames))
                for frames, landmarks in sources
            ])
        return toy_store_from_config(data.toy_frames, data.toy_videos, self.cfg.seed)

    @property
    def optimizers(self) -> Optimizers:
        return self.opt_g, self.opt_d

    def batches(self) -> Iterator[Batch]:
        if self._batches is None:
            stream = iterate_batches(self.store, self.cfg.batch_size, self.rng)
            self._batches = stream if self.cfg.data.deterministic else prefetch(stream)
        return self._batches

    def fit(self, steps: Optional[int] = None, batch: Optional[Batch] = None) -> List[StepMetrics]:
        """
        Run ``steps`` optimisation steps (default: up to ``cfg.steps``).

        Args:
            steps: Number of steps to run from the current step.
            batch: Train on this fixed batch every step instead of the
                   data stream (overfit runs).

        Returns:
            Metrics of every step run.
        """
        steps = self.cfg.steps - self.step if steps is None else steps
        history: List[StepMetrics] = []
        if steps <= 0:
            logger.info(f"Nothing to train: step {self.step} of {self.cfg.steps}")
            return history

        fixed = batch.to(self.device) if batch is not None else None
        dump_dir = os.path.join(self.cfg.output.dir, "diagnostics")
        start = time.perf_counter()
        logger.info(f"Training {steps} steps from step {self.step} on {self.device}")

        with open(self.log_path, "a") as log:
            for _ in tqdm(range(steps), desc="train", disable=not self.progress):
                current = fixed if fixed is not None else next(self.batches()).to(self.device)
                metrics = train_step(
                    current, self.generator, self.discriminator, self.optimizers,
                    self.cfg, self.extractor, step=self.step + 1, dump_dir=dump_dir,
                )
                self.step += 1
                history.append(metrics)
                log.write(json.dumps({**metrics.to_dict(), "wall_time": time.perf_counter() - start}) + "\n")

                if self.step % self.cfg.output.checkpoint_every == 0:
                    self.save(os.path.join(self.cfg.output.dir, f"step_{self.step:06d}.pt"))

        self.save(os.path.join(self.cfg.output.dir, "latest.pt"))
        last = history[-1]
        logger.info(
            f"Finished at step {self.step}: d={last.d_loss:.4f} g={last.g_total:.4f} "
            f"rec={last.rec:.4f} ({time.perf_counter() - start:.1f}s)"
        )
        return history

    def checkpoint(self) -> Checkpoint:
        return Checkpoint(
            step=self.step,
            model_config=self.cfg.model_config(),
            generator=self.generator.state_dict(),
            discriminator=self.discriminator.state_dict(),
            optim_g=self.opt_g.state_dict(),
            optim_d=self.opt_d.state_dict(),
            train_config=self.cfg.to_dict(),
        )

    def save(self, path: str) -> str:
        return save_checkpoint(path, self.checkpoint())

    def resume(self, path: str) -> None:
        """Restore models, optimizers and the step counter from ``path``."""
        ckpt = load_checkpoint(path, map_location=str(self.device))
        self.generator.load_state_dict(ckpt.generator)
        if ckpt.discriminator is not None:
            self.discriminator.load_state_dict(ckpt.discriminator)
        if ckpt.optim_g is not None:
            self.opt_g.load_state_dict(ckpt.optim_g)
        if ckpt.optim_d is not None:
            self.opt_d.load_state_dict(ckpt.optim_d)
        self.step = ckpt.step
        logger.info(f"Resumed from {path} at step {self.step}")

    @torch.no_grad()
    def predict(self, batch: Batch) -> torch.Tensor:
        """Generator output for ``batch`` in eval mode."""
        self.generator.eval()
        batch = batch.to(self.device)
        return self.generator(batch.masked, batch.contour, batch.reference)
