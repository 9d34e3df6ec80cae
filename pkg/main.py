"""
Teeth Restoration - Command Line Interface

Commands:
    train     Train generator + discriminator from a YAML config
    restore   Restore the mouth region of every frame in a directory
    evaluate  Score frame directories with the eight sharpness metrics
    bench     Time generator forwards of a checkpoint
    synth     Write a synthetic toy video (frames + landmark sidecars)

For the latency sweep over model variants, use evaluation/benchmark.py.

Usage:
    python main.py synth --out data/toy
    python main.py train --config configs/train_toy.yaml
    python main.py restore --ckpt results/train/latest.pt --frames data/toy/frames \\
        --landmarks data/toy/landmarks --out results/restored
    python main.py evaluate --frames results/restored --landmarks data/toy/landmarks \\
        --against data/toy/frames
    python main.py bench --ckpt results/train/latest.pt --iters 100

Exit codes: 0 success, 2 pipeline error, 1 unexpected error. Failures print
one line to stderr: error=<ClassName> message=<json string>.
"""

import argparse
import dataclasses
import json
import os
import sys
from typing import List, Optional

import config
from src.common.errors import ConfigurationError, HDTRError, UsageError
from src.common.logger import get_logger, setup_logging

logger = get_logger(__name__)


def print_header(title: str) -> None:
    """Print a section header."""
    print()
    print("=" * 60)
    print(title)
    print("=" * 60)


# =============================================================================
# Commands
# =============================================================================

def cmd_train(args: argparse.Namespace) -> int:
    from src.training.config import load_train_config
    from src.training.trainer import Trainer

    cfg = load_train_config(args.config)
    if args.steps is not None:
        cfg = dataclasses.replace(cfg, steps=args.steps)
    if args.out is not None:
        cfg = dataclasses.replace(cfg, output=dataclasses.replace(cfg.output, dir=args.out))

    print_header("TRAIN")
    print(f"Config:  {args.config}")
    print(f"Seed:    {cfg.seed}")
    print(f"Steps:   {cfg.steps} (batch {cfg.batch_size}, lr {cfg.learning_rate})")
    print(f"Ablations: {dataclasses.asdict(cfg.ablations)}")

    trainer = Trainer(cfg, device=args.device, progress=not args.no_progress)
    history = trainer.fit()
    if history:
        last = history[-1]
        print(f"Final step {last.step}: d_loss={last.d_loss:.4f} g_total={last.g_total:.4f} "
              f"rec={last.rec:.4f} perc={last.perc:.4f} g_adv={last.g_adv:.4f}")
    print(f"Checkpoint: {os.path.join(cfg.output.dir, 'latest.pt')}")
    print(f"Log:        {trainer.log_path}")
    return 0


def cmd_restore(args: argparse.Namespace) -> int:
    import torch

    from src.common.image_io import read_image
    from src.inference.session import ReferencePolicy, RestoreSession
    from src.inference.video import restore_video
    from src.metrics.report import format_table
    from src.training.checkpoint import load_generator

    policy = ReferencePolicy.from_name(args.ref_policy)
    fixed = None
    if policy is ReferencePolicy.FIXED_FRAME:
        if not args.ref_image:
            raise ConfigurationError("--ref-policy fixed_frame requires --ref-image")
        fixed = read_image(args.ref_image)

    device = torch.device(args.device or ("cuda" if torch.cuda.is_available() else "cpu"))
    generator = load_generator(args.ckpt, device=str(device))
    session = RestoreSession(generator, reference_policy=policy, fixed_reference=fixed, device=device)

    print_header("RESTORE")
    print(f"Frames:    {args.frames}")
    print(f"Policy:    {policy.value}")
    reports, summary = restore_video(session, args.frames, args.landmarks, args.out)
    print(f"Restored:  {len(reports)} frames -> {args.out}")
    print()
    print(format_table({os.path.basename(os.path.normpath(args.out)): summary}))
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    from src.inference.video import score_directory
    from src.metrics.report import format_table, write_report

    rows = {}
    reports, summary = score_directory(args.frames, args.landmarks)
    rows[os.path.basename(os.path.normpath(args.frames))] = summary
    if args.report:
        write_report(args.report, reports, summary)

    if args.against:
        against_landmarks = args.against_landmarks or args.landmarks
        _, against_summary = score_directory(args.against, against_landmarks)
        label = os.path.basename(os.path.normpath(args.against))
        if label in rows:
            label = args.against
        rows[label] = against_summary

    print_header("EVALUATE")
    region = "aligned mouth crop" if args.landmarks else "whole frame"
    print(f"Region: {region}; {summary['frames']} frame(s)")
    print()
    print(format_table(rows))
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    from evaluation.benchmark import bench, print_stats
    from src.model.generator import count_parameters
    from src.training.checkpoint import load_generator

    import torch

    device = args.device or ("cuda" if torch.cuda.is_available() else "cpu")
    generator = load_generator(args.ckpt, device=device)
    stats = bench(generator, n_iters=args.iters, warmup=args.warmup, device=device)
    print_stats(stats, count_parameters(generator))
    if args.json:
        print(json.dumps(stats.to_dict()))
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    import numpy as np

    from src.training.synthetic import synthesize_toy_dataset, write_frame_store

    store = synthesize_toy_dataset(
        args.frames,
        np.random.default_rng(args.seed),
        size=(args.size, args.size),
        videos=args.videos,
        static=args.static,
        drop_landmarks=args.drop,
    )
    frame_dir, landmark_dir = write_frame_store(store, args.out)

    print_header("SYNTH")
    print(f"Frames:    {frame_dir} ({len(store)})")
    print(f"Landmarks: {landmark_dir} ({len(store) - len(store.usable_indices())} empty)")
    return 0


# =============================================================================
# Argument Parsing
# =============================================================================

class CLIParser(argparse.ArgumentParser):
    """Argument parser that raises UsageError instead of printing usage and exiting."""

    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> CLIParser:
    # Subparsers inherit the parser class
    parser = CLIParser(description="Teeth restoration pipeline")
    parser.add_argument("--log-level", type=str, default=None, help="Override HDTR_LOG_LEVEL / config.LOG_LEVEL")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="Train from a YAML config")
    p.add_argument("--config", type=str, default=config.DEFAULT_TRAIN_CONFIG, help="Training config (YAML)")
    p.add_argument("--steps", type=int, default=None, help="Override optim.steps")
    p.add_argument("--out", type=str, default=None, help="Override output.dir")
    p.add_argument("--device", type=str, default=None, help="Torch device")
    p.add_argument("--no-progress", action="store_true", help="Disable the progress bar")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("restore", help="Restore a frame directory")
    p.add_argument("--ckpt", type=str, required=True, help="Checkpoint path")
    p.add_argument("--frames", type=str, required=True, help="Input frame directory")
    p.add_argument("--landmarks", type=str, required=True, help="Landmark sidecar directory")
    p.add_argument("--out", type=str, required=True, help="Output frame directory")
    p.add_argument("--ref-policy", type=str, default=config.DEFAULT_REFERENCE_POLICY,
                   choices=config.REFERENCE_POLICIES, help="Reference crop source")
    p.add_argument("--ref-image", type=str, default=None, help="Still image for the fixed_frame policy")
    p.add_argument("--device", type=str, default=None, help="Torch device")
    p.set_defaults(func=cmd_restore)

    p = sub.add_parser("evaluate", help="Sharpness metrics of frame directories")
    p.add_argument("--frames", type=str, required=True, help="Frame directory to score")
    p.add_argument("--landmarks", type=str, default=None, help="Score aligned mouth crops using these sidecars")
    p.add_argument("--against", type=str, default=None, help="Second directory for a side-by-side table")
    p.add_argument("--against-landmarks", type=str, default=None,
                   help="Sidecars for --against (default: --landmarks)")
    p.add_argument("--report", type=str, default=None, help="Write the per-frame report (JSON lines)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("bench", help="Generator latency of a checkpoint")
    p.add_argument("--ckpt", type=str, required=True, help="Checkpoint path")
    p.add_argument("--iters", type=int, default=config.BENCH_ITERS, help="Timed iterations")
    p.add_argument("--warmup", type=int, default=config.BENCH_WARMUP, help="Warmup iterations")
    p.add_argument("--device", type=str, default=None, help="Torch device")
    p.add_argument("--json", action="store_true", help="Also print the stats as one JSON line")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("synth", help="Write a synthetic toy video")
    p.add_argument("--out", type=str, required=True, help="Output directory (frames/ + landmarks/)")
    p.add_argument("--frames", type=int, default=config.TOY_FRAMES, help="Frames per video")
    p.add_argument("--videos", type=int, default=1, help="Number of videos")
    p.add_argument("--size", type=int, default=config.TOY_FRAME_SIZE[0], help="Square frame size")
    p.add_argument("--seed", type=int, default=config.SEED, help="Random seed")
    p.add_argument("--static", action="store_true", help="Identical frames")
    p.add_argument("--drop", type=int, nargs="*", default=[], help="Frame indices written without landmarks")
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        _report_error(exc)
        return 2
    if args.log_level:
        setup_logging(level=args.log_level, force=True)

    try:
        return args.func(args)
    except HDTRError as exc:
        _report_error(exc)
        return 2
    except Exception as exc:
        logger.debug("Unexpected failure", exc_info=True)
        _report_error(exc)
        return 1


def _report_error(exc: BaseException) -> None:
    print(f"error={type(exc).__name__} message={json.dumps(str(exc))}", file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
