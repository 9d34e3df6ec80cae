"""
Visualization module for benchmark results and metric reports.

Generates latency / size plots from the benchmark CSV and per-frame
sharpness curves from a restore or evaluate report.

Usage:
    python -m evaluation.visualize
    python -m evaluation.visualize --input results/benchmark_results.csv
    python -m evaluation.visualize --report results/restored/report.jsonl
    python -m evaluation.visualize --output results/plots/
"""

import argparse
import os
import sys
from typing import Optional

import pandas as pd
import matplotlib.pyplot as plt

# Add project root to path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import config
from src.metrics.report import read_report


# =============================================================================
# Configuration
# =============================================================================

# Plot styling
VARIANT_COLORS = {
    "default": "#3498db",  # Blue
    "w/o CF": "#e74c3c",  # Red
    "w/o ref": "#2ecc71",  # Green
}
FIGURE_DPI = 150
FIGURE_SIZE_METRICS = (16, 8)
FIGURE_SIZE_COMPARISON = (12, 6)

METRIC_LABELS = {
    "brenner": "Brenner",
    "laplacian": "Laplacian",
    "smd": "SMD",
    "smd2": "SMD2",
    "variance": "Variance",
    "energy": "Energy",
    "vollath": "Vollath",
    "entropy": "Entropy",
}


# =============================================================================
# Data Loading
# =============================================================================

def load_benchmark_data(filepath: str) -> pd.DataFrame:
    """Load benchmark results from CSV."""
    if not os.path.exists(filepath):
        raise FileNotFoundError(f"Benchmark results not found: {filepath}")

    df = pd.read_csv(filepath)
    print(f"Loaded {len(df)} rows from {filepath}")
    return df


# =============================================================================
# Plot 1: Latency per Variant and Width
# =============================================================================

def plot_latency(df: pd.DataFrame, output_dir: str) -> str:
    """
    Grouped bars of median latency (ms/frame) per base width, one bar per
    variant, with the p95 value marked on top of each bar.
    """
    widths = sorted(df["base_channels"].unique())
    variants = [v for v in VARIANT_COLORS if v in set(df["variant"])]
    bar_width = 0.8 / max(1, len(variants))

    fig, ax = plt.subplots(figsize=FIGURE_SIZE_COMPARISON)
    for i, variant in enumerate(variants):
        vdata = df[df["variant"] == variant].set_index("base_channels").reindex(widths)
        xs = [w_idx + (i - (len(variants) - 1) / 2) * bar_width for w_idx in range(len(widths))]
        ax.bar(xs, vdata["median_s"] * 1000, width=bar_width,
               color=VARIANT_COLORS[variant], label=variant, alpha=0.85)
        ax.scatter(xs, vdata["p95_s"] * 1000, marker="_", s=200, color="black")

    ax.set_xticks(range(len(widths)))
    ax.set_xticklabels([f"base={w}" for w in widths])
    ax.set_ylabel("Median latency (ms/frame); bar tick = p95")
    ax.set_title("Generator Latency by Variant", fontsize=13, fontweight="bold")
    ax.grid(True, axis="y", alpha=0.3)
    ax.legend()
    plt.tight_layout()

    output_path = os.path.join(output_dir, "latency_plot.png")
    plt.savefig(output_path, dpi=FIGURE_DPI, bbox_inches="tight")
    plt.close()

    print(f"Saved: {output_path}")
    return output_path


# =============================================================================
# Plot 2: Parameter Count
# =============================================================================

def plot_parameters(df: pd.DataFrame, output_dir: str) -> str:
    """Parameter count (millions) vs base width for each variant."""
    fig, ax = plt.subplots(figsize=FIGURE_SIZE_COMPARISON)
    for variant, color in VARIANT_COLORS.items():
        vdata = df[df["variant"] == variant].sort_values("base_channels")
        if vdata.empty:
            continue
        ax.plot(vdata["base_channels"], vdata["parameters"] / 1e6,
                marker="o", color=color, linewidth=2, markersize=8, label=variant)

    ax.axhline(config.MAX_GENERATOR_PARAMETERS / 1e6, color="gray", linestyle="--",
               label=f"{config.MAX_GENERATOR_PARAMETERS / 1e6:.0f} M bound")
    ax.set_xlabel("Base channels")
    ax.set_ylabel("Parameters (M)")
    ax.set_title("Generator Size", fontsize=13, fontweight="bold")
    ax.grid(True, alpha=0.3)
    ax.legend(loc="upper left")
    ax.set_xticks(sorted(df["base_channels"].unique()))
    plt.tight_layout()

    output_path = os.path.join(output_dir, "parameters_plot.png")
    plt.savefig(output_path, dpi=FIGURE_DPI, bbox_inches="tight")
    plt.close()

    print(f"Saved: {output_path}")
    return output_path


# =============================================================================
# Plot 3: Summary Table
# =============================================================================

def plot_summary_table(df: pd.DataFrame, output_dir: str) -> str:
    """Table image: one row per (width, variant)."""
    table_data = []
    for _, row in df.sort_values(["base_channels", "variant"]).iterrows():
        table_data.append([
            str(row["base_channels"]),
            row["variant"],
            f"{row['parameters'] / 1e6:.2f} M",
            f"{row['median_s'] * 1000:.2f}",
            f"{row['p95_s'] * 1000:.2f}",
            f"{row['mean_s'] * 1000:.2f}",
        ])
    columns = ["Width", "Variant", "Params", "Median ms", "P95 ms", "Mean ms"]

    fig, ax = plt.subplots(figsize=(10, 0.5 * len(table_data) + 1.5))
    ax.axis("off")
    table = ax.table(cellText=table_data, colLabels=columns, cellLoc="center", loc="center")
    table.auto_set_font_size(False)
    table.set_fontsize(10)
    table.scale(1.2, 1.6)
    for j in range(len(columns)):
        table[(0, j)].set_facecolor("#2c3e50")
        table[(0, j)].set_text_props(color="white", fontweight="bold")

    hardware = df["hardware"].iloc[0] if "hardware" in df.columns and len(df) else ""
    plt.title(f"Latency Summary\n{hardware}", fontsize=12, fontweight="bold", pad=20)
    plt.tight_layout()

    output_path = os.path.join(output_dir, "summary_table.png")
    plt.savefig(output_path, dpi=FIGURE_DPI, bbox_inches="tight")
    plt.close()

    print(f"Saved: {output_path}")
    return output_path


# =============================================================================
# Plot 4: Per-frame Sharpness Curves
# =============================================================================

def plot_metric_curves(report_path: str, output_dir: str) -> Optional[str]:
    """One subplot per metric, value vs frame index, from a metric report."""
    frames, summary = read_report(report_path)
    if frames.empty:
        print(f"No frames in {report_path}")
        return None

    fig, axes = plt.subplots(2, 4, figsize=FIGURE_SIZE_METRICS)
    for ax, name in zip(axes.flatten(), config.METRIC_NAMES):
        ax.plot(range(len(frames)), frames[name], color="#3498db", linewidth=1.5)
        if summary.get(name) is not None:
            ax.axhline(summary[name], color="#e74c3c", linestyle="--", linewidth=1, label="mean")
        ax.set_title(METRIC_LABELS[name], fontsize=11, fontweight="bold")
        ax.set_xlabel("Frame")
        ax.grid(True, alpha=0.3)
    axes[0][0].legend(loc="upper left")

    fig.suptitle(f"Per-frame Sharpness: {os.path.basename(os.path.dirname(report_path)) or report_path}",
                 fontsize=14, fontweight="bold")
    plt.tight_layout()

    output_path = os.path.join(output_dir, "metric_curves.png")
    plt.savefig(output_path, dpi=FIGURE_DPI, bbox_inches="tight")
    plt.close()

    print(f"Saved: {output_path}")
    return output_path


# =============================================================================
# Main
# =============================================================================

def generate_all_plots(input_file: Optional[str], output_dir: str, report_file: Optional[str] = None) -> None:
    """Generate all visualization plots for the inputs that exist."""
    os.makedirs(output_dir, exist_ok=True)
    print(f"\nGenerating plots to: {output_dir}")
    print("-" * 50)

    if input_file is not None:
        df = load_benchmark_data(input_file)
        plot_latency(df, output_dir)
        plot_parameters(df, output_dir)
        plot_summary_table(df, output_dir)

    if report_file is not None:
        if not os.path.exists(report_file):
            raise FileNotFoundError(f"Metric report not found: {report_file}")
        plot_metric_curves(report_file, output_dir)

    print("-" * 50)
    print("All plots generated successfully!")


def main():
    """Main entry point."""
    parser = argparse.ArgumentParser(description="Generate benchmark and metric visualizations")
    parser.add_argument(
        "--input", "-i",
        type=str,
        default=os.path.join(config.RESULTS_DIR, "benchmark_results.csv"),
        help="Input CSV file from benchmark"
    )
    parser.add_argument(
        "--report", "-r",
        type=str,
        default=None,
        help="Metric report (report.jsonl) from restore or evaluate"
    )
    parser.add_argument(
        "--output", "-o",
        type=str,
        default=config.RESULTS_DIR,
        help="Output directory for plots"
    )
    args = parser.parse_args()

    try:
        generate_all_plots(args.input, args.output, args.report)
        return 0
    except FileNotFoundError as e:
        print(f"Error: {e}")
        print("Run the benchmark first: python -m evaluation.benchmark")
        return 1
    except Exception as e:
        print(f"Error generating plots: {e}")
        raise


if __name__ == "__main__":
    sys.exit(main())
