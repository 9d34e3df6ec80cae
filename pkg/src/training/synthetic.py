"""
Procedural face-like videos with exact landmarks.

Each frame is an ellipse "face" on a plain background with a lip polygon
whose opening varies over time and a textured teeth band inside the inner
lip. Landmarks follow the 68-point layout and are exact by construction,
so the whole pipeline runs without external data.
"""

import os
from typing import Iterable, List, Optional, Tuple

import cv2
import numpy as np

import config
from src.common.data_loader import FrameRecord, FrameStore, sidecar_name
from src.common.errors import ConfigurationError
from src.common.image_io import write_image
from src.common.logger import get_logger
from src.geometry.landmarks import LandmarkSet, write_landmarks

logger = get_logger(__name__)

BACKGROUND = (0.20, 0.22, 0.25)
LIP_COLOR = (0.62, 0.25, 0.28)
MOUTH_INTERIOR = (0.12, 0.04, 0.05)
TEETH_COLOR = (0.93, 0.91, 0.86)
TEETH_GAP = (0.55, 0.50, 0.45)


def face_landmarks(
    center: Tuple[float, float],
    radii: Tuple[float, float],
    opening: float,
    mouth_half_width: float,
    lip_thickness: float,
) -> LandmarkSet:
    """
    Analytic 68-point layout for an upright ellipse face.

    Args:
        center: Face centre (x, y).
        radii: Face ellipse radii (rx, ry).
        opening: Vertical gap between inner lips, pixels.
        mouth_half_width: Half the distance between the mouth corners.
        lip_thickness: Outer-to-inner lip distance at the lip centre.
    """
    cx, cy = center
    rx, ry = radii
    pts = np.zeros((config.LANDMARK_COUNT, 2), dtype=np.float64)

    # Jaw 0-16: lower half of the face ellipse, left to right, chin at 8
    for i, angle in enumerate(np.linspace(np.pi, 0.0, 17)):
        pts[i] = (cx + rx * np.cos(angle), cy + ry * np.sin(angle))

    # Eyebrows 17-26
    for i, t in enumerate(np.linspace(-0.75, -0.15, 5)):
        pts[17 + i] = (cx + t * rx, cy - 0.45 * ry - 0.05 * ry * np.cos(t * np.pi))
        pts[26 - i] = (cx - t * rx, cy - 0.45 * ry - 0.05 * ry * np.cos(t * np.pi))

    # Nose bridge 27-30, lower nose 31-35 (tip at 33)
    for i, t in enumerate(np.linspace(-0.35, 0.0, 4)):
        pts[27 + i] = (cx, cy + t * ry)
    for i, t in enumerate(np.linspace(-0.18, 0.18, 5)):
        pts[31 + i] = (cx + t * rx, cy + 0.12 * ry - 0.04 * ry * np.cos(t * np.pi * 2.5))
    pts[config.NOSE_TIP_INDEX] = (cx, cy + 0.14 * ry)

    # Eyes 36-41 and 42-47
    for side, start in ((-1.0, 36), (1.0, 42)):
        ex, ey = cx + side * 0.42 * rx, cy - 0.28 * ry
        for i, angle in enumerate(np.linspace(np.pi, -np.pi, 6, endpoint=False)):
            pts[start + i] = (ex + 0.18 * rx * np.cos(angle), ey + 0.06 * ry * np.sin(angle))

    # Mouth
    mx, my = cx, cy + 0.58 * ry
    w = mouth_half_width
    half_gap = opening / 2.0

    # Outer lip 48-59: left corner, upper lip, right corner, lower lip
    pts[48] = (mx - w, my)
    for i, s in enumerate(np.linspace(-2.0 / 3.0, 2.0 / 3.0, 5)):
        pts[49 + i] = (mx + s * w, my - (half_gap + lip_thickness) * _bulge(s) - 0.15 * lip_thickness)
    pts[54] = (mx + w, my)
    for i, s in enumerate(np.linspace(2.0 / 3.0, -2.0 / 3.0, 5)):
        pts[55 + i] = (mx + s * w, my + (half_gap + lip_thickness) * _bulge(s) + 0.15 * lip_thickness)

    # Inner lip 60-67: left corner, upper inner, right corner, lower inner
    inner_w = 0.8 * w
    pts[60] = (mx - inner_w, my)
    for i, s in enumerate((-0.5, 0.0, 0.5)):
        pts[61 + i] = (mx + s * inner_w, my - half_gap * _bulge(s))
    pts[64] = (mx + inner_w, my)
    for i, s in enumerate((0.5, 0.0, -0.5)):
        pts[65 + i] = (mx + s * inner_w, my + half_gap * _bulge(s))

    return LandmarkSet(pts)


def render_face(
    size: Tuple[int, int],
    landmarks: LandmarkSet,
    center: Tuple[float, float],
    radii: Tuple[float, float],
    skin: Tuple[float, float, float],
    teeth_phase: float,
) -> np.ndarray:
    """Draw one RGB [0, 1] frame matching ``landmarks``."""
    height, width = size
    frame = np.empty((height, width, 3), dtype=np.float32)
    frame[:] = BACKGROUND

    cv2.ellipse(
        frame,
        (int(round(center[0])), int(round(center[1]))),
        (int(round(radii[0])), int(round(radii[1]))),
        0, 0, 360, skin, thickness=-1, lineType=cv2.LINE_8,
    )

    outer = np.rint(landmarks.outer_lip).astype(np.int32)
    inner = np.rint(landmarks.inner_lip).astype(np.int32)
    cv2.fillPoly(frame, [outer], LIP_COLOR, lineType=cv2.LINE_8)
    cv2.fillPoly(frame, [inner], MOUTH_INTERIOR, lineType=cv2.LINE_8)

    # Teeth band: upper half of the inner mouth, vertical gaps every few pixels
    inner_mask = np.zeros((height, width), dtype=np.uint8)
    cv2.fillPoly(inner_mask, [inner], 1, lineType=cv2.LINE_8)
    if inner_mask.any():
        mouth_y = landmarks.points[60, 1]
        band = inner_mask.astype(bool) & (np.arange(height)[:, None] <= mouth_y + 1)
        frame[band] = TEETH_COLOR
        period = 4
        cols = (np.arange(width)[None, :] + int(teeth_phase)) % period == 0
        frame[band & cols] = TEETH_GAP
    return frame


def synthesize_toy_dataset(
    n_frames: int,
    rng: np.random.Generator,
    size: Tuple[int, int] = config.TOY_FRAME_SIZE,
    videos: int = 1,
    static: bool = False,
    drop_landmarks: Iterable[int] = (),
) -> FrameStore:
    """
    Generate a synthetic frame store.

    Args:
        n_frames: Frames per video.
        rng: Source of all randomness (equal seeds give equal stores).
        size: Frame (height, width).
        videos: Number of videos, each with its own face placement and skin.
        static: Every frame of a video identical (constant opening).
        drop_landmarks: Frame indices (within each video) whose landmarks
                        are removed, to exercise pass-through.

    Returns:
        FrameStore with in-memory images and exact landmarks.

    Raises:
        ConfigurationError: Non-positive counts or frames too small.
    """
    if n_frames < 1 or videos < 1:
        raise ConfigurationError(f"Need n_frames >= 1 and videos >= 1, got {n_frames}, {videos}")
    height, width = size
    if min(height, width) < 48:
        raise ConfigurationError(f"Toy frames must be at least 48x48, got {height}x{width}")

    dropped = set(drop_landmarks)
    records: List[FrameRecord] = []
    for v in range(videos):
        video = f"toy_{v:02d}"
        center = (
            width * (0.5 + rng.uniform(-0.05, 0.05)),
            height * (0.45 + rng.uniform(-0.03, 0.03)),
        )
        radii = (width * rng.uniform(0.26, 0.32), height * rng.uniform(0.36, 0.40))
        skin = tuple(float(c) for c in (rng.uniform(0.65, 0.85), rng.uniform(0.50, 0.65), rng.uniform(0.40, 0.55)))
        mouth_half_width = radii[0] * rng.uniform(0.38, 0.46)
        lip_thickness = radii[1] * rng.uniform(0.06, 0.09)
        max_opening = radii[1] * rng.uniform(0.14, 0.2)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        noise = rng.normal(0.0, 0.01, size=(height, width, 3)).astype(np.float32)

        for k in range(n_frames):
            if static:
                opening = 0.6 * max_opening
            else:
                opening = max_opening * (0.3 + 0.7 * 0.5 * (1.0 + np.sin(2.0 * np.pi * k / 8.0 + phase)))
            landmarks = face_landmarks(center, radii, opening, mouth_half_width, lip_thickness)
            frame = render_face(size, landmarks, center, radii, skin, teeth_phase=0 if static else k % 2)
            frame = np.clip(frame + noise, 0.0, 1.0)
            records.append(FrameRecord(
                name=f"{k:05d}.png",
                video=video,
                landmarks=None if k in dropped else landmarks,
                image=frame,
            ))

    logger.info(f"Synthesized {len(records)} toy frames ({videos} video(s), {height}x{width})")
    return FrameStore(records)


def write_frame_store(store: FrameStore, out_dir: str) -> Tuple[str, str]:
    """
    Write a store as ``out_dir/frames`` + ``out_dir/landmarks``.

    Landmark-less frames get empty sidecars.

    Returns:
        (frame directory, landmark directory).
    """
    frame_dir = os.path.join(out_dir, "frames")
    landmark_dir = os.path.join(out_dir, "landmarks")
    os.makedirs(frame_dir, exist_ok=True)
    os.makedirs(landmark_dir, exist_ok=True)
    multi = len(store.videos) > 1
    for i, record in enumerate(store.records):
        name = f"{record.video}_{record.name}" if multi else record.name
        write_image(os.path.join(frame_dir, name), store.image(i))
        write_landmarks(os.path.join(landmark_dir, sidecar_name(name)), record.landmarks)
    logger.info(f"Wrote {len(store)} frames to {frame_dir}")
    return frame_dir, landmark_dir


def toy_store_from_config(n_frames: int, videos: int, seed: Optional[int]) -> FrameStore:
    """Convenience wrapper used by the trainer and the CLI."""
    return synthesize_toy_dataset(n_frames, np.random.default_rng(seed), videos=videos)


def _bulge(s: float) -> float:
    # 1 at the lip centre, 0 at the corners
    return 1.0 - s * s
