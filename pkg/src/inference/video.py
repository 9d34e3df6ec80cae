"""
Directory-based video restoration and evaluation.

Frames are restored strictly in file-name order, since each frame's
reference depends on the previous result. Loading and mouth preprocessing
of frame t+1 run on a worker thread while frame t is restored.
"""

import os
import shutil
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Tuple

import numpy as np

from src.common.data_loader import FrameStore, list_frames, load_frame_store
from src.common.errors import DatasetError, GeometryError
from src.common.image_io import read_image, to_uint8, write_image
from src.common.logger import get_logger
from src.geometry.landmarks import LandmarkSet
from src.geometry.mouth import MouthInputs, aligned_crop, compute_crop_box, prepare_mouth
from src.inference.session import RestoreSession, restore_frame
from src.metrics.report import MetricReport, score_frames, write_report

logger = get_logger(__name__)

REPORT_NAME = "report.jsonl"


def _load(store: FrameStore, index: int) -> Tuple[np.ndarray, Optional[MouthInputs]]:
    """
    Image and mouth inputs of frame ``index``.

    Inputs are None when the frame has no landmarks or when its landmarks
    give no usable mouth box (for example a face outside the frame).
    """
    frame = store.image(index)
    record = store[index]
    if record.landmarks is None:
        return frame, None
    try:
        return frame, prepare_mouth(frame, record.landmarks)
    except GeometryError as exc:
        logger.warning(f"{record.name}: unusable landmarks, passed through ({exc})")
        return frame, None


def restore_video(
    session: RestoreSession,
    frame_dir: str,
    landmark_dir: str,
    out_dir: str,
    report_path: Optional[str] = None,
) -> Tuple[List[MetricReport], Dict[str, Optional[float]]]:
    """
    Restore every frame of a video directory.

    Output frames keep the input names. Frames without landmarks are copied
    byte for byte, and so are frames whose landmarks give no usable mouth
    box. The metric report scores the restored mouth crop of each
    restored frame and the whole image of each pass-through frame.

    Args:
        session: Restoration session (reset before use).
        frame_dir: Input frame directory.
        landmark_dir: Landmark sidecar directory.
        out_dir: Output frame directory.
        report_path: Report location (default ``out_dir/report.jsonl``).

    Returns:
        (per-frame reports, aggregate means).

    Raises:
        DatasetError: Empty frame directory or frame/landmark count mismatch,
                      raised before any frame is processed.
    """
    store = load_frame_store(frame_dir, landmark_dir)
    if os.path.abspath(out_dir) == os.path.abspath(frame_dir):
        raise DatasetError("Output directory must differ from the frame directory")
    os.makedirs(out_dir, exist_ok=True)
    session.reset()

    scored: List[np.ndarray] = []
    latencies: List[Optional[float]] = []
    regions: List[str] = []
    names: List[str] = []
    held: List[bool] = []

    with ThreadPoolExecutor(max_workers=1) as pool:
        pending = pool.submit(_load, store, 0)
        for i, record in enumerate(store.records):
            frame, inputs = pending.result()
            if i + 1 < len(store):
                pending = pool.submit(_load, store, i + 1)

            out_path = os.path.join(out_dir, record.name)
            landmarks = record.landmarks if inputs is not None else None
            result = restore_frame(session, frame, landmarks, inputs)
            if result.passed_through:
                shutil.copyfile(record.path, out_path)
                scored.append(to_uint8(frame))
                regions.append("frame")
            else:
                write_image(out_path, result.frame)
                scored.append(to_uint8(result.crop))
                regions.append("crop")
            latencies.append(result.latency)
            names.append(record.name)
            held.append(result.held)
            store.clear_cache()

    reports, summary = score_frames(scored, latencies, names, regions, held)
    write_report(report_path or os.path.join(out_dir, REPORT_NAME), reports, summary)

    passed = regions.count("frame")
    time_ms = f"{summary['time'] * 1000:.2f} ms/frame" if summary["time"] is not None else "n/a"
    logger.info(f"Restored {len(store) - passed}/{len(store)} frames into {out_dir} ({time_ms})")
    return reports, summary


def score_directory(
    frame_dir: str,
    landmark_dir: Optional[str] = None,
) -> Tuple[List[MetricReport], Dict[str, Optional[float]]]:
    """
    Sharpness report of a frame directory.

    With ``landmark_dir`` each frame is scored on its aligned mouth crop
    (frames without landmarks, or whose landmarks give no usable mouth box,
    on the whole image); without it every frame is scored as a whole.

    Raises:
        DatasetError: Empty directory or frame/landmark mismatch.
    """
    images: List[np.ndarray] = []
    regions: List[str] = []
    if landmark_dir is None:
        names = list_frames(frame_dir)
        for name in names:
            images.append(to_uint8(read_image(os.path.join(frame_dir, name))))
            regions.append("frame")
    else:
        store = load_frame_store(frame_dir, landmark_dir)
        names = [r.name for r in store.records]
        for i, record in enumerate(store.records):
            frame = store.image(i)
            crop = _mouth_crop(frame, record.name, record.landmarks)
            if crop is None:
                images.append(to_uint8(frame))
                regions.append("frame")
            else:
                images.append(to_uint8(crop))
                regions.append("crop")
            store.clear_cache()

    reports, summary = score_frames(images, names=names, regions=regions)
    logger.info(f"Scored {len(reports)} frames from {frame_dir}")
    return reports, summary


def _mouth_crop(frame: np.ndarray, name: str, landmarks: Optional[LandmarkSet]) -> Optional[np.ndarray]:
    if landmarks is None:
        return None
    try:
        return aligned_crop(frame, compute_crop_box(landmarks, frame_shape=frame.shape))
    except GeometryError as exc:
        logger.warning(f"{name}: unusable landmarks, scored as a whole frame ({exc})")
        return None
