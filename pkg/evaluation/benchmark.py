"""
Latency benchmark for the restoration generator.

Measures seconds per frame of one generator forward at 3x96x96 and runs a
sweep over the default model and its architectural ablations (w/o CF,
w/o reference FGFF) across channel widths.

Outputs results to CSV for visualization.

Usage:
    python -m evaluation.benchmark
    python -m evaluation.benchmark --quick  # Quick run with smaller parameters
"""

import argparse
import csv
import os
import platform
import statistics
import sys
import time
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np
import torch

# Add project root to path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import config
from src.common.errors import BenchmarkError
from src.common.logger import get_logger
from src.common.seeding import set_seed
from src.model.generator import HDTRGenerator, count_parameters
from src.model.model_config import ModelConfig

logger = get_logger(__name__)

# Variant name -> ModelConfig switches
VARIANTS: Dict[str, Dict[str, bool]] = {
    "default": {},
    "w/o CF": {"use_cf": False},
    "w/o ref": {"use_reference_branch": False},
}


# =============================================================================
# Configuration
# =============================================================================

@dataclass
class BenchmarkConfig:
    """Configuration for benchmark runs."""
    # Base channel widths to test
    widths: List[int] = field(default_factory=lambda: [16, 32, 64])

    # Model variants to test
    variants: List[str] = field(default_factory=lambda: list(VARIANTS))

    # Timed forward passes per model
    n_iters: int = config.BENCH_ITERS

    # Untimed forward passes before measuring
    warmup: int = config.BENCH_WARMUP

    # Random seed for weight init and inputs
    seed: int = config.SEED

    # Torch device ("cpu", "cuda")
    device: str = "cuda" if torch.cuda.is_available() else "cpu"

    # Output directory
    output_dir: str = config.RESULTS_DIR


@dataclass
class QuickBenchmarkConfig(BenchmarkConfig):
    """Smaller configuration for quick testing."""
    widths: List[int] = field(default_factory=lambda: [16, 32])
    n_iters: int = 20
    warmup: int = 3


# =============================================================================
# Latency Measurement
# =============================================================================

@dataclass
class LatencyStats:
    """Seconds per frame of a generator forward."""
    median: float
    p95: float
    mean: float
    n_iters: int
    warmup: int
    hardware: str

    def to_dict(self) -> Dict[str, Any]:
        return {
            "median_s": round(self.median, 6),
            "p95_s": round(self.p95, 6),
            "mean_s": round(self.mean, 6),
            "n_iters": self.n_iters,
            "warmup": self.warmup,
            "hardware": self.hardware,
        }


def hardware_description(device: torch.device) -> str:
    """Short description of where the benchmark ran."""
    if device.type == "cuda":
        name = torch.cuda.get_device_name(device)
    else:
        name = platform.processor() or platform.machine() or "cpu"
        name = f"{name} ({torch.get_num_threads()} threads)"
    return f"{name}; torch {torch.__version__}; {platform.system()}"


@torch.no_grad()
def bench(
    generator: HDTRGenerator,
    n_iters: int = config.BENCH_ITERS,
    warmup: int = config.BENCH_WARMUP,
    device: Optional[str] = None,
    seed: int = config.SEED,
) -> LatencyStats:
    """
    Time single-frame generator forwards.

    Args:
        generator: Model to time (put in eval mode).
        n_iters: Timed forwards (>= 1).
        warmup: Untimed forwards run first (>= 0).
        device: Device to run on (default: the generator's).
        seed: Seed for the random inputs.

    Returns:
        LatencyStats with median, p95 and mean seconds per frame.

    Raises:
        BenchmarkError: Invalid iteration counts.
    """
    if n_iters < 1:
        raise BenchmarkError(f"n_iters must be >= 1, got {n_iters}")
    if warmup < 0:
        raise BenchmarkError(f"warmup must be >= 0, got {warmup}")

    dev = torch.device(device) if device else next(generator.parameters()).device
    generator = generator.to(dev).eval()

    gen = torch.Generator().manual_seed(seed)
    shape = (1, 3, config.CROP_SIZE, config.CROP_SIZE)
    masked, contour, reference = (torch.rand(shape, generator=gen).to(dev) for _ in range(3))

    for _ in range(warmup):
        generator(masked, contour, reference)
    _synchronize(dev)

    times = []
    for _ in range(n_iters):
        _synchronize(dev)
        start = time.perf_counter()
        generator(masked, contour, reference)
        _synchronize(dev)
        times.append(time.perf_counter() - start)

    return LatencyStats(
        median=statistics.median(times),
        p95=float(np.percentile(times, 95)),
        mean=statistics.mean(times),
        n_iters=n_iters,
        warmup=warmup,
        hardware=hardware_description(dev),
    )


def _synchronize(device: torch.device) -> None:
    if device.type == "cuda":
        torch.cuda.synchronize(device)


# =============================================================================
# Variant Sweep
# =============================================================================

@dataclass
class VariantResult:
    """Latency and size of one model variant."""
    variant: str
    base_channels: int
    parameters: int
    stats: LatencyStats

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary for CSV output."""
        return {
            "variant": self.variant,
            "base_channels": self.base_channels,
            "parameters": self.parameters,
            **self.stats.to_dict(),
        }


class BenchmarkRunner:
    """Runs the latency sweep over variants and widths."""

    def __init__(self, cfg: BenchmarkConfig):
        """Initialize the benchmark runner."""
        unknown = [v for v in cfg.variants if v not in VARIANTS]
        if unknown:
            raise BenchmarkError(f"Unknown variants {unknown}; expected {list(VARIANTS)}")
        self.cfg = cfg
        self.results: List[VariantResult] = []

    def run_all(self) -> List[VariantResult]:
        """Run all benchmarks and return results."""
        for width in self.cfg.widths:
            print()
            print("=" * 60)
            print(f"BENCHMARKING BASE WIDTH {width}")
            print("=" * 60)
            for variant in self.cfg.variants:
                self.results.append(self._benchmark_variant(variant, width))
        return self.results

    def _benchmark_variant(self, variant: str, width: int) -> VariantResult:
        set_seed(self.cfg.seed)
        model_config = ModelConfig(base_channels=width, **VARIANTS[variant])
        generator = HDTRGenerator(model_config)
        params = count_parameters(generator)

        print(f"  {variant:<10} {params:>12,} params ...", end=" ", flush=True)
        stats = bench(generator, self.cfg.n_iters, self.cfg.warmup, self.cfg.device, self.cfg.seed)
        print(f"median={stats.median * 1000:.2f} ms  p95={stats.p95 * 1000:.2f} ms")
        return VariantResult(variant=variant, base_channels=width, parameters=params, stats=stats)

    def save_results(self, filename: str = "benchmark_results.csv") -> str:
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

def print_stats(stats: LatencyStats, parameters: Optional[int] = None) -> None:
    """Print the result of a single ``bench`` call."""
    print()
    print("=" * 60)
    print("GENERATOR LATENCY (seconds / frame, 3x96x96)")
    print("=" * 60)
    if parameters is not None:
        print(f"  Parameters: {parameters:,}")
    print(f"  Median:     {stats.median:.6f}")
    print(f"  P95:        {stats.p95:.6f}")
    print(f"  Mean:       {stats.mean:.6f}")
    print(f"  Iterations: {stats.n_iters} (warmup {stats.warmup})")
    print(f"  Hardware:   {stats.hardware}")


def print_summary(results: List[VariantResult]) -> None:
    """Print a summary table of results."""
    print()
    print("=" * 80)
    print("BENCHMARK SUMMARY")
    print("=" * 80)
    print(f"{'Width':<8} {'Variant':<10} {'Params':>12} {'Median ms':>12} {'P95 ms':>10} {'vs default':>12}")
    print("-" * 70)

    for width in sorted(set(r.base_channels for r in results)):
        baseline = next((r for r in results if r.base_channels == width and r.variant == "default"), None)
        for r in (r for r in results if r.base_channels == width):
            if baseline and r is not baseline:
                ratio = f"{r.stats.median / baseline.stats.median:.2f}x"
            else:
                ratio = "-"
            print(
                f"{width:<8} {r.variant:<10} {r.parameters:>12,} "
                f"{r.stats.median * 1000:>12.2f} {r.stats.p95 * 1000:>10.2f} {ratio:>12}"
            )


# =============================================================================
# Main
# =============================================================================

def main():
    """Main entry point for benchmark."""
    parser = argparse.ArgumentParser(description="Generator Latency Benchmark")
    parser.add_argument("--quick", action="store_true", help="Run quick benchmark with smaller parameters")
    parser.add_argument("--output", type=str, default="benchmark_results.csv", help="Output CSV filename")
    parser.add_argument("--device", type=str, default=None, help="Torch device (default: cuda if available)")
    args = parser.parse_args()

    # Select configuration
    if args.quick:
        print("Running QUICK benchmark (smaller parameters)...")
        cfg = QuickBenchmarkConfig()
    else:
        print("Running FULL benchmark...")
        cfg = BenchmarkConfig()
    if args.device:
        cfg.device = args.device

    print("Configuration:")
    print(f"  Widths: {cfg.widths}")
    print(f"  Variants: {cfg.variants}")
    print(f"  Iterations: {cfg.n_iters} (warmup {cfg.warmup})")
    print(f"  Device: {cfg.device}")

    start_time = time.time()

    runner = BenchmarkRunner(cfg)
    results = runner.run_all()

    elapsed = time.time() - start_time
    print(f"\nBenchmark completed in {elapsed:.1f} seconds")

    runner.save_results(args.output)
    print_summary(results)


if __name__ == "__main__":
    main()
