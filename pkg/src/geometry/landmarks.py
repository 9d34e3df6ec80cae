"""
68-point facial landmarks (iBUG ordering) and their sidecar file format.

A sidecar holds one "x y" line per landmark. An empty sidecar means no face
was found in the frame.
"""

import os
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

import config
from src.common.errors import GeometryError
from src.common.logger import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True)
class LandmarkSet:
    """
    Facial keypoints for one frame, in source-frame pixel coordinates.

    Attributes:
        points: (68, 2) float64 array of (x, y) pairs.
    """
    points: np.ndarray

    def __post_init__(self):
        points = np.asarray(self.points, dtype=np.float64)
        if points.shape != (config.LANDMARK_COUNT, 2):
            raise GeometryError(
                f"Expected {config.LANDMARK_COUNT} (x, y) landmarks, got shape {points.shape}"
            )
        if not np.all(np.isfinite(points)):
            raise GeometryError("Landmark coordinates must be finite")
        points.setflags(write=False)
        object.__setattr__(self, "points", points)

    @classmethod
    def from_sequence(cls, pairs: Sequence[Sequence[float]]) -> "LandmarkSet":
        return cls(np.asarray(pairs, dtype=np.float64))

    def subset(self, indices: Sequence[int]) -> np.ndarray:
        """Return a (len(indices), 2) copy of the selected points."""
        return self.points[list(indices)].copy()

    def shifted(self, dx: float, dy: float) -> "LandmarkSet":
        return LandmarkSet(self.points + np.array([dx, dy]))

    @property
    def outer_lip(self) -> np.ndarray:
        return self.subset(config.OUTER_LIP_INDICES)

    @property
    def inner_lip(self) -> np.ndarray:
        return self.subset(config.INNER_LIP_INDICES)


def read_landmarks(path: str) -> Optional[LandmarkSet]:
    """
    Read a landmark sidecar file.

    Args:
        path: Path to a text file with one "x y" line per landmark.

    Returns:
        The LandmarkSet, or None if the file is empty (no face in frame).

    Raises:
        GeometryError: If the file is malformed, or the mouth corners are
                       not ordered left-to-right.
    """
    with open(path, "r", encoding="utf-8") as f:
        lines = [line.strip() for line in f if line.strip()]

    if not lines:
        return None

    try:
        pairs = [tuple(float(v) for v in line.split()) for line in lines]
    except ValueError:
        raise GeometryError(f"Non-numeric landmark value in {path}") from None

    if any(len(p) != 2 for p in pairs):
        raise GeometryError(f"Each landmark line must hold exactly 'x y': {path}")

    landmarks = LandmarkSet.from_sequence(pairs)

    left_x = landmarks.points[config.MOUTH_LEFT_INDEX, 0]
    right_x = landmarks.points[config.MOUTH_RIGHT_INDEX, 0]
    if not left_x < right_x:
        raise GeometryError(
            f"Mouth corners out of order in {path}: "
            f"x({config.MOUTH_LEFT_INDEX})={left_x} >= x({config.MOUTH_RIGHT_INDEX})={right_x}"
        )
    return landmarks


def write_landmarks(path: str, landmarks: Optional[LandmarkSet]) -> None:
    """Write a sidecar file; None writes an empty file."""
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        if landmarks is None:
            return
        for x, y in landmarks.points:
            f.write(f"{x:.4f} {y:.4f}\n")
