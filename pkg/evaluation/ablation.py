"""
Ablation study on the synthetic toy video.

Trains one generator per ablation condition (default, w/o CF, w/o reference
FGFF, w/o perceptual loss) on the same toy video, restores that video with
it and scores the restored frames on their aligned mouth crops. The
unrestored input is scored too, as the first table row.

Outputs results to CSV and prints the comparison table.

Usage:
    python -m evaluation.ablation
    python -m evaluation.ablation --quick  # Few steps on a shorter video
"""

import argparse
import csv
import os
import re
import sys
import time
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import torch

# Add project root to path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import config
from src.common.errors import ConfigurationError
from src.common.logger import get_logger
from src.inference.session import RestoreSession
from src.inference.video import restore_video, score_directory
from src.metrics.report import format_table
from src.training.config import Ablations, DataConfig, OutputConfig, TrainConfig
from src.training.synthetic import synthesize_toy_dataset, write_frame_store
from src.training.trainer import Trainer

logger = get_logger(__name__)

# Condition name -> switches
CONDITIONS: Dict[str, Ablations] = {
    "default": Ablations(),
    "w/o CF": Ablations(use_cf=False),
    "w/o ref": Ablations(use_reference_branch=False),
    "w/o perc": Ablations(use_perc_loss=False),
}

INPUT_LABEL = "input"


# =============================================================================
# Configuration
# =============================================================================

@dataclass
class AblationConfig:
    """Configuration for ablation runs."""
    # Conditions to train
    conditions: List[str] = field(default_factory=lambda: list(CONDITIONS))

    # Training steps per condition
    steps: int = config.ABLATION_STEPS

    # Toy video length and frames written without landmarks
    n_frames: int = config.ABLATION_FRAMES
    drop: List[int] = field(default_factory=list)

    # Model and optimiser (CPU-sized, as in configs/train_toy.yaml)
    base_channels: int = 16
    discriminator_channels: int = 16
    extractor: str = "toy"
    learning_rate: float = 1e-3
    batch_size: int = 4

    # Same seed for every condition
    seed: int = config.SEED

    # Torch device ("cpu", "cuda")
    device: str = "cuda" if torch.cuda.is_available() else "cpu"

    # Output directory
    output_dir: str = os.path.join(config.RESULTS_DIR, "ablation")


@dataclass
class QuickAblationConfig(AblationConfig):
    """Smaller configuration for quick testing."""
    steps: int = 20
    n_frames: int = 8


# =============================================================================
# Ablation Runs
# =============================================================================

@dataclass
class AblationResult:
    """Scores of the video restored by one condition's generator."""
    condition: str
    steps: int
    final_rec: Optional[float]
    summary: Dict[str, Optional[float]]

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary for CSV output."""
        return {
            "condition": self.condition,
            "steps": self.steps,
            "final_rec": None if self.final_rec is None else round(self.final_rec, 6),
            "frames": self.summary.get("frames"),
            "time": self.summary.get("time"),
            **{name: self.summary.get(name) for name in config.METRIC_NAMES},
        }


def condition_slug(condition: str) -> str:
    """Directory name for a condition ("w/o CF" -> "w_o_cf")."""
    return re.sub(r"[^a-z0-9]+", "_", condition.lower()).strip("_")


class AblationRunner:
    """Trains, restores and scores every ablation condition."""

    def __init__(self, cfg: AblationConfig):
        """Initialize the ablation runner."""
        unknown = [c for c in cfg.conditions if c not in CONDITIONS]
        if unknown:
            raise ConfigurationError(f"Unknown ablation conditions {unknown}; expected {list(CONDITIONS)}")
        self.cfg = cfg
        self.results: List[AblationResult] = []
        self.input_summary: Optional[Dict[str, Optional[float]]] = None

    def prepare_video(self) -> Tuple[str, str]:
        """Write the toy video every condition trains on and restores."""
        store = synthesize_toy_dataset(
            self.cfg.n_frames, np.random.default_rng(self.cfg.seed), drop_landmarks=self.cfg.drop
        )
        return write_frame_store(store, os.path.join(self.cfg.output_dir, "video"))

    def train_config(self, condition: str, frame_dir: str, landmark_dir: str) -> TrainConfig:
        return TrainConfig(
            learning_rate=self.cfg.learning_rate,
            batch_size=self.cfg.batch_size,
            steps=self.cfg.steps,
            ablations=CONDITIONS[condition],
            seed=self.cfg.seed,
            base_channels=self.cfg.base_channels,
            discriminator_channels=self.cfg.discriminator_channels,
            extractor=self.cfg.extractor,
            data=DataConfig(frames=frame_dir, landmarks=landmark_dir, deterministic=True),
            output=OutputConfig(
                dir=os.path.join(self.cfg.output_dir, condition_slug(condition), "train"),
                checkpoint_every=max(1, self.cfg.steps),
            ),
        )

    def run_all(self) -> List[AblationResult]:
        """Run all conditions and return results."""
        frame_dir, landmark_dir = self.prepare_video()
        _, self.input_summary = score_directory(frame_dir, landmark_dir)
        for condition in self.cfg.conditions:
            print()
            print("=" * 60)
            print(f"ABLATION: {condition}")
            print("=" * 60)
            self.results.append(self._run_condition(condition, frame_dir, landmark_dir))
        return self.results

    def _run_condition(self, condition: str, frame_dir: str, landmark_dir: str) -> AblationResult:
        trainer = Trainer(self.train_config(condition, frame_dir, landmark_dir),
                          device=self.cfg.device, progress=False)
        history = trainer.fit()
        final_rec = history[-1].rec if history else None

        restored_dir = os.path.join(self.cfg.output_dir, condition_slug(condition), "restored")
        session = RestoreSession(trainer.generator, device=trainer.device)
        _, restored = restore_video(session, frame_dir, landmark_dir, restored_dir)

        _, summary = score_directory(restored_dir, landmark_dir)
        summary = {**summary, "time": restored["time"]}

        rec = "n/a" if final_rec is None else f"{final_rec:.4f}"
        print(f"  {condition:<10} rec={rec}  brenner={summary['brenner']:.4f}  -> {restored_dir}")
        return AblationResult(condition=condition, steps=trainer.step, final_rec=final_rec, summary=summary)

    def table(self) -> str:
        """Comparison table: the input row, then one row per condition."""
        rows: Dict[str, Dict[str, Optional[float]]] = {}
        if self.input_summary is not None:
            rows[INPUT_LABEL] = self.input_summary
        for result in self.results:
            rows[result.condition] = result.summary
        return format_table(rows)

    def save_results(self, filename: str = "ablation_results.csv") -> str:
        """Save results to CSV file."""
        os.makedirs(self.cfg.output_dir, exist_ok=True)
        filepath = os.path.join(self.cfg.output_dir, filename)

        with open(filepath, "w", newline="") as f:
            if self.results:
                writer = csv.DictWriter(f, fieldnames=self.results[0].to_dict().keys())
                writer.writeheader()
                for result in self.results:
                    writer.writerow(result.to_dict())

        print(f"\nResults saved to: {filepath}")
        return filepath


# =============================================================================
# Result Printer
# =============================================================================

def print_summary(runner: AblationRunner) -> None:
    """Print the comparison table and the final training losses."""
    print()
    print("=" * 80)
    print("ABLATION SUMMARY (aligned mouth crops)")
    print("=" * 80)
    print(runner.table())
    print()
    print(f"{'Condition':<12} {'Steps':>8} {'Final rec':>12}")
    print("-" * 34)
    for r in runner.results:
        rec = "-" if r.final_rec is None else f"{r.final_rec:.4f}"
        print(f"{r.condition:<12} {r.steps:>8} {rec:>12}")


# =============================================================================
# Main
# =============================================================================

def main():
    """Main entry point for the ablation study."""
    parser = argparse.ArgumentParser(description="Ablation Study on the Toy Video")
    parser.add_argument("--quick", action="store_true", help="Few steps on a shorter video")
    parser.add_argument("--output", type=str, default="ablation_results.csv", help="Output CSV filename")
    parser.add_argument("--steps", type=int, default=None, help="Override training steps per condition")
    parser.add_argument("--device", type=str, default=None, help="Torch device (default: cuda if available)")
    args = parser.parse_args()

    # Select configuration
    if args.quick:
        print("Running QUICK ablation (fewer steps)...")
        cfg = QuickAblationConfig()
    else:
        print("Running FULL ablation...")
        cfg = AblationConfig()
    if args.steps is not None:
        cfg.steps = args.steps
    if args.device:
        cfg.device = args.device

    print("Configuration:")
    print(f"  Conditions: {cfg.conditions}")
    print(f"  Steps: {cfg.steps}")
    print(f"  Frames: {cfg.n_frames}")
    print(f"  Device: {cfg.device}")

    start_time = time.time()

    runner = AblationRunner(cfg)
    runner.run_all()

    elapsed = time.time() - start_time
    print(f"\nAblation completed in {elapsed:.1f} seconds")

    runner.save_results(args.output)
    print_summary(runner)


if __name__ == "__main__":
    main()
