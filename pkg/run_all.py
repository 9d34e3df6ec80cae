"""
Teeth Restoration - Run All

One-click script that synthesizes a toy video, trains on it, restores it,
evaluates the result, benchmarks latency, runs the ablation study and
generates plots.

Usage:
    python run_all.py          # Full run (toy config, full benchmark)
    python run_all.py --quick  # Quick run (few training steps, quick benchmark and ablation)
"""

import argparse
import subprocess
import sys
import os
import time

DATA_DIR = os.path.join("data", "toy")
TRAIN_DIR = os.path.join("results", "train")
RESTORED_DIR = os.path.join("results", "restored")


def run_step(description, command):
    """Run a command and print its output."""
    print()
    print("=" * 60)
    print(f"  {description}")
    print("=" * 60)
    print(f"  Command: {' '.join(command)}")
    print()

    result = subprocess.run(command, cwd=os.path.dirname(os.path.abspath(__file__)))

    if result.returncode != 0:
        print(f"\n  [FAILED] {description} (exit code {result.returncode})")
        return False

    print(f"\n  [OK] {description}")
    return True


def main():
    parser = argparse.ArgumentParser(description="Run the full synth / train / restore / evaluate / bench / ablation pipeline.")
    parser.add_argument("--quick", action="store_true", help="Few training steps and a quick benchmark")
    parser.add_argument("--skip-train", action="store_true", help="Reuse an existing checkpoint")
    parser.add_argument("--skip-benchmark", action="store_true", help="Skip the benchmark step (use existing results)")
    parser.add_argument("--skip-ablation", action="store_true", help="Skip the ablation study")
    args = parser.parse_args()

    python = sys.executable
    start = time.time()
    checkpoint = os.path.join(TRAIN_DIR, "latest.pt")

    print()
    print("########################################################")
    print("#       Teeth Restoration - Toy Pipeline               #")
    print("########################################################")
    mode = "QUICK" if args.quick else "FULL"
    print(f"  Mode: {mode}")
    print()

    steps = [
        ("Step 1/7: Synthesize toy video",
         [python, "main.py", "synth", "--out", DATA_DIR, "--frames", "16", "--drop", "5"]),
    ]
    if not args.skip_train:
        train_cmd = [python, "main.py", "train", "--config", os.path.join("configs", "train_toy.yaml"),
                     "--out", TRAIN_DIR, "--no-progress"]
        if args.quick:
            train_cmd += ["--steps", "20"]
        steps.append(("Step 2/7: Train", train_cmd))
    steps += [
        ("Step 3/7: Restore",
         [python, "main.py", "restore", "--ckpt", checkpoint,
          "--frames", os.path.join(DATA_DIR, "frames"),
          "--landmarks", os.path.join(DATA_DIR, "landmarks"), "--out", RESTORED_DIR]),
        ("Step 4/7: Evaluate",
         [python, "main.py", "evaluate", "--frames", RESTORED_DIR,
          "--landmarks", os.path.join(DATA_DIR, "landmarks"),
          "--against", os.path.join(DATA_DIR, "frames")]),
    ]
    if not args.skip_benchmark:
        bench_cmd = [python, "-m", "evaluation.benchmark"]
        if args.quick:
            bench_cmd.append("--quick")
        steps.append(("Step 5/7: Benchmark (variant sweep)", bench_cmd))
    if not args.skip_ablation:
        ablation_cmd = [python, "-m", "evaluation.ablation"]
        if args.quick:
            ablation_cmd.append("--quick")
        steps.append(("Step 6/7: Ablation study", ablation_cmd))
    steps.append(("Step 7/7: Generate plots",
                  [python, "-m", "evaluation.visualize",
                   "--report", os.path.join(RESTORED_DIR, "report.jsonl")]))

    for description, command in steps:
        if not run_step(description, command):
            return 1

    elapsed = time.time() - start

    print()
    print("=" * 60)
    print("  ALL DONE")
    print("=" * 60)
    print(f"  Total time: {elapsed:.1f} seconds")
    print()
    print("  Output files:")
    print("    results/train/latest.pt          - Trained checkpoint")
    print("    results/train/train_log.jsonl    - Training log")
    print("    results/restored/                - Restored frames + report.jsonl")
    print("    results/benchmark_results.csv    - Latency sweep")
    print("    results/ablation/ablation_results.csv - Ablation scores")
    print("    results/latency_plot.png         - Latency by variant")
    print("    results/parameters_plot.png      - Generator size")
    print("    results/summary_table.png        - Summary table")
    print("    results/metric_curves.png        - Per-frame sharpness")
    print()

    return 0


if __name__ == "__main__":
    sys.exit(main())
