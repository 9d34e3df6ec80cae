"""
Frame store: ordered video frames with their landmark sidecars.

A video on disk is a directory of lossless frame images plus a directory of
landmark sidecars, one "<frame stem>.txt" per frame. Frames are ordered by
file name.
"""

import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

import config
from src.common.errors import DatasetError
from src.common.image_io import read_image
from src.common.logger import get_logger
from src.geometry.landmarks import LandmarkSet, read_landmarks

logger = get_logger(__name__)


@dataclass
class FrameRecord:
    """
    One frame of a video.

    Attributes:
        name: File name of the frame (or a generated name for in-memory frames).
        video: Identifier of the video the frame belongs to.
        path: Source image path, None for in-memory frames.
        landmarks: Facial landmarks, None if no face was found.
        image: In-memory RGB [0, 1] image; loaded lazily when ``path`` is set.
    """
    name: str
    video: str
    path: Optional[str] = None
    landmarks: Optional[LandmarkSet] = None
    image: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def has_landmarks(self) -> bool:
        return self.landmarks is not None


class FrameStore:
    """
    Ordered collection of frames from one or more videos.

    Images read from disk are cached after first access.
    """

    def __init__(self, records: List[FrameRecord]):
        self.records = list(records)
        self._cache: Dict[int, np.ndarray] = {}

    def __len__(self) -> int:
        return len(self.records)

    def __getitem__(self, index: int) -> FrameRecord:
        return self.records[index]

    def image(self, index: int) -> np.ndarray:
        """RGB float32 image of frame ``index``."""
        record = self.records[index]
        if record.image is not None:
            return record.image
        image = self._cache.get(index)
        if image is None:
            if record.path is None:
                raise DatasetError(f"Frame {record.name} has neither an image nor a path")
            image = read_image(record.path)
            self._cache[index] = image
        return image

    def usable_indices(self) -> List[int]:
        """Indices of frames that have landmarks."""
        return [i for i, r in enumerate(self.records) if r.has_landmarks]

    def video_indices(self, video: str) -> List[int]:
        return [i for i, r in enumerate(self.records) if r.video == video]

    @property
    def videos(self) -> List[str]:
        return list(dict.fromkeys(r.video for r in self.records))

    def clear_cache(self) -> None:
        self._cache.clear()

    @classmethod
    def concat(cls, stores: List["FrameStore"]) -> "FrameStore":
        return cls([r for s in stores for r in s.records])


def list_frames(frame_dir: str) -> List[str]:
    """
    Sorted frame file names in ``frame_dir``.

    Raises:
        DatasetError: Directory missing or holding no frames.
    """
    if not os.path.isdir(frame_dir):
        raise DatasetError(f"Frame directory not found: {frame_dir}")
    names = sorted(
        n for n in os.listdir(frame_dir)
        if os.path.splitext(n)[1].lower() in config.FRAME_EXTENSIONS
    )
    if not names:
        raise DatasetError(f"No frames ({', '.join(config.FRAME_EXTENSIONS)}) in {frame_dir}")
    return names


def sidecar_name(frame_name: str) -> str:
    return os.path.splitext(frame_name)[0] + config.LANDMARK_EXTENSION


def load_frame_store(frame_dir: str, landmark_dir: str, video: Optional[str] = None) -> FrameStore:
    """
    Pair every frame with its landmark sidecar.

    Counts are checked before anything is read. An empty sidecar marks a
    landmark-less frame; a missing sidecar is a count mismatch.

    Args:
        frame_dir: Directory of frame images.
        landmark_dir: Directory of landmark sidecars.
        video: Video identifier (default: basename of ``frame_dir``).

    Returns:
        FrameStore with lazily loaded images.

    Raises:
        DatasetError: Empty frame directory or frame/landmark mismatch.
        GeometryError: Malformed sidecar.
    """
    names = list_frames(frame_dir)
    if not os.path.isdir(landmark_dir):
        raise DatasetError(f"Landmark directory not found: {landmark_dir}")

    sidecars = sorted(
        n for n in os.listdir(landmark_dir)
        if n.endswith(config.LANDMARK_EXTENSION)
    )
    expected = [sidecar_name(n) for n in names]
    missing = [s for s in expected if s not in set(sidecars)]
    if len(sidecars) != len(names) or missing:
        raise DatasetError(
            f"Frame/landmark count mismatch: {len(names)} frames in {frame_dir}, "
            f"{len(sidecars)} sidecars in {landmark_dir}"
            + (f" (missing {missing[:3]}{'...' if len(missing) > 3 else ''})" if missing else "")
        )

    video = video or os.path.basename(os.path.normpath(frame_dir))
    records = []
    for name, sidecar in zip(names, expected):
        landmarks = read_landmarks(os.path.join(landmark_dir, sidecar))
        records.append(FrameRecord(
            name=name,
            video=video,
            path=os.path.join(frame_dir, name),
            landmarks=landmarks,
        ))

    without = sum(1 for r in records if not r.has_landmarks)
    logger.info(f"Loaded {len(records)} frames from {frame_dir} ({without} without landmarks)")
    return FrameStore(records)
