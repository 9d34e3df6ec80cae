"""
Per-frame sharpness reports and their aggregation.

Reports are written as JSON lines: one record per frame in a fixed key
order, then one aggregate record holding the dataset-level means.
"""

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

import config
from src.common.errors import MetricError
from src.common.logger import get_logger
from src.metrics.sharpness import compute_all

logger = get_logger(__name__)


@dataclass
class MetricReport:
    """
    Sharpness of one frame.

    Attributes:
        frame: Frame name (file name or index).
        metrics: metric name -> value, all eight keys in report order.
        latency: Generator forward seconds, None for frames not restored.
        height: Height of the scored region.
        width: Width of the scored region.
        region: "crop" for the aligned mouth crop, "frame" for a whole image.
        held: The previous restored crop was reused, so no forward ran and
              ``latency`` is None.
    """
    frame: str
    metrics: Dict[str, float]
    latency: Optional[float] = None
    height: int = 0
    width: int = 0
    region: str = "frame"
    held: bool = False

    def to_record(self) -> Dict[str, object]:
        record: Dict[str, object] = {
            "frame": self.frame, "region": self.region, "height": self.height, "width": self.width,
        }
        for name in config.METRIC_NAMES:
            record[name] = self.metrics[name]
        record["time"] = self.latency
        record["held"] = self.held
        return record


def score_frame(
    image: np.ndarray,
    frame: str = "",
    latency: Optional[float] = None,
    region: str = "frame",
    held: bool = False,
) -> MetricReport:
    """Score one [0, 255] gray or RGB image."""
    values, (height, width) = compute_all(image)
    return MetricReport(
        frame=str(frame), metrics=values, latency=latency, height=height, width=width,
        region=region, held=held,
    )


def score_frames(
    frames: Sequence[np.ndarray],
    latencies: Optional[Sequence[Optional[float]]] = None,
    names: Optional[Sequence[str]] = None,
    regions: Optional[Sequence[str]] = None,
    held: Optional[Sequence[bool]] = None,
    workers: int = config.METRIC_WORKERS,
) -> Tuple[List[MetricReport], Dict[str, Optional[float]]]:
    """
    Score an ordered sequence of frames.

    Frames are scored in parallel; reports keep the input order.

    Args:
        frames: Images in [0, 255].
        latencies: Optional per-frame forward seconds.
        names: Optional per-frame names (default: index).
        regions: Optional per-frame region tags (default: "frame").
        held: Optional per-frame hold flags (default: False).
        workers: Scoring threads.

    Returns:
        (per-frame reports, aggregate means incl. "time").

    Raises:
        MetricError: Empty input or mismatched sequence lengths.
    """
    if len(frames) == 0:
        raise MetricError("No frames to score")
    if latencies is not None and len(latencies) != len(frames):
        raise MetricError(f"{len(latencies)} latencies for {len(frames)} frames")
    if names is not None and len(names) != len(frames):
        raise MetricError(f"{len(names)} names for {len(frames)} frames")

    latencies = latencies if latencies is not None else [None] * len(frames)
    names = names if names is not None else [str(i) for i in range(len(frames))]
    regions = regions if regions is not None else ["frame"] * len(frames)
    if len(regions) != len(frames):
        raise MetricError(f"{len(regions)} regions for {len(frames)} frames")
    held = held if held is not None else [False] * len(frames)
    if len(held) != len(frames):
        raise MetricError(f"{len(held)} hold flags for {len(frames)} frames")

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        reports = list(pool.map(score_frame, frames, names, latencies, regions, held))

    return reports, aggregate(reports)


def aggregate(reports: Iterable[MetricReport]) -> Dict[str, Optional[float]]:
    """
    Arithmetic mean of every metric and of the known latencies.

    "time" averages only frames that ran a forward; "timed" and "held"
    count the frames behind it and the frames that reused a crop.
    """
    reports = list(reports)
    if not reports:
        raise MetricError("No reports to aggregate")
    means: Dict[str, Optional[float]] = {
        name: float(np.mean([r.metrics[name] for r in reports])) for name in config.METRIC_NAMES
    }
    times = [r.latency for r in reports if r.latency is not None]
    means["time"] = float(np.mean(times)) if times else None
    means["frames"] = len(reports)
    means["timed"] = len(times)
    means["held"] = sum(1 for r in reports if r.held)
    return means


def write_report(path: str, reports: Sequence[MetricReport], summary: Dict[str, Optional[float]]) -> str:
    """Write per-frame records and the aggregate record as JSON lines."""
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "w") as f:
        for report in reports:
            f.write(json.dumps(report.to_record()) + "\n")
        f.write(json.dumps({"aggregate": True, **summary}) + "\n")
    logger.info(f"Metric report written: {path} ({len(reports)} frames)")
    return path


def read_report(path: str) -> Tuple[pd.DataFrame, Dict[str, Optional[float]]]:
    """Load a report written by ``write_report`` as (per-frame frame, aggregate)."""
    rows, summary = [], {}
    with open(path) as f:
        for line in f:
            if not line.strip():
                continue
            record = json.loads(line)
            if record.pop("aggregate", False):
                summary = record
            else:
                rows.append(record)
    return pd.DataFrame(rows), summary


def format_table(rows: Dict[str, Dict[str, Optional[float]]]) -> str:
    """
    Aligned comparison table: one row per label, columns Time then the
    eight metrics.
    """
    columns = ["time", *config.METRIC_NAMES]
    table = pd.DataFrame.from_dict(rows, orient="index").reindex(columns=columns)
    table.columns = ["Time", *(name.capitalize() for name in config.METRIC_NAMES)]
    table.index.name = "Method"
    return table.to_string(float_format=lambda v: f"{v:.4f}", na_rep="-")
