"""
Training sample assembly.

A sample pairs the model inputs of one frame (masked mouth, contour and a
reference crop taken from a different frame) with that frame's aligned
crop as the target.
"""

from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, Iterator, List, Optional

import numpy as np
import torch

from src.common.data_loader import FrameStore
from src.common.errors import DatasetError
from src.common.image_io import to_tensor
from src.common.logger import get_logger
from src.geometry.mouth import MouthInputs, MouthTriplet, build_triplet, prepare_mouth

logger = get_logger(__name__)


@dataclass
class Sample:
    """
    Attributes:
        triplet: Model inputs (I_m, I_c, I_r).
        target: Ground-truth aligned crop I_g, (3, 96, 96) in [0, 1].
        index: Frame index of the target.
        reference_index: Frame index the reference crop came from.
    """
    triplet: MouthTriplet
    target: torch.Tensor
    index: int
    reference_index: int


@dataclass
class Batch:
    """Stacked samples, each tensor (N, 3, 96, 96)."""
    masked: torch.Tensor
    contour: torch.Tensor
    reference: torch.Tensor
    target: torch.Tensor
    indices: List[int]

    def __len__(self) -> int:
        return len(self.indices)

    def to(self, device: torch.device) -> "Batch":
        return Batch(
            masked=self.masked.to(device),
            contour=self.contour.to(device),
            reference=self.reference.to(device),
            target=self.target.to(device),
            indices=list(self.indices),
        )


class MouthCache:
    """Per-frame ``prepare_mouth`` results, computed once."""

    def __init__(self, store: FrameStore):
        self.store = store
        self._inputs: Dict[int, MouthInputs] = {}

    def get(self, index: int) -> MouthInputs:
        if index not in self._inputs:
            record = self.store[index]
            self._inputs[index] = prepare_mouth(self.store.image(index), record.landmarks)
        return self._inputs[index]


def reference_candidates(store: FrameStore, index: int) -> List[int]:
    """
    Frames eligible as reference for ``index``.

    Other usable frames of the same video when there are any, otherwise any
    other usable frame.
    """
    usable = [i for i in store.usable_indices() if i != index]
    allowed = set(usable)
    same_video = [i for i in store.video_indices(store[index].video) if i in allowed]
    return same_video or usable


def build_sample(
    store: FrameStore,
    index: int,
    rng: np.random.Generator,
    cache: Optional[MouthCache] = None,
) -> Optional[Sample]:
    """
    Build the training sample for frame ``index``.

    Args:
        store: Frame store with at least two usable frames.
        index: Target frame.
        rng: Draws the reference frame.
        cache: Optional shared geometry cache.

    Returns:
        The Sample, or None if the frame has no landmarks (logged).

    Raises:
        DatasetError: Fewer than two usable frames in the store.
    """
    if len(store.usable_indices()) < 2:
        raise DatasetError("Training needs at least two frames with landmarks")
    if not store[index].has_landmarks:
        logger.warning(f"Skipping frame {store[index].name}: no landmarks")
        return None

    cache = cache or MouthCache(store)
    candidates = reference_candidates(store, index)
    reference_index = candidates[int(rng.integers(len(candidates)))]

    inputs = cache.get(index)
    reference = cache.get(reference_index).crop
    return Sample(
        triplet=build_triplet(inputs, reference),
        target=to_tensor(inputs.crop),
        index=index,
        reference_index=reference_index,
    )


def collate(samples: List[Sample]) -> Batch:
    if not samples:
        raise DatasetError("Cannot collate an empty batch")
    return Batch(
        masked=torch.stack([s.triplet.masked for s in samples]),
        contour=torch.stack([s.triplet.contour for s in samples]),
        reference=torch.stack([s.triplet.reference for s in samples]),
        target=torch.stack([s.target for s in samples]),
        indices=[s.index for s in samples],
    )


def iterate_batches(store: FrameStore, batch_size: int, rng: np.random.Generator) -> Iterator[Batch]:
    """
    Endless stream of batches; targets drawn uniformly from usable frames.

    All randomness comes from ``rng``, so the stream is reproducible.
    """
    usable = store.usable_indices()
    if len(usable) < 2:
        raise DatasetError(
            f"Training needs at least two frames with landmarks, got {len(usable)}"
        )
    skipped = len(store) - len(usable)
    if skipped:
        logger.warning(f"{skipped} frame(s) without landmarks excluded from training")

    cache = MouthCache(store)
    while True:
        picks = rng.choice(usable, size=batch_size, replace=len(usable) < batch_size)
        yield collate([build_sample(store, int(i), rng, cache) for i in picks])


def fixed_batch(store: FrameStore, indices: List[int], rng: np.random.Generator) -> Batch:
    """One batch of the given frames (overfit runs and tests)."""
    cache = MouthCache(store)
    samples = [build_sample(store, i, rng, cache) for i in indices]
    missing = [i for i, s in zip(indices, samples) if s is None]
    if missing:
        raise DatasetError(f"Frames without landmarks requested: {missing}")
    return collate(samples)


def prefetch(batches: Iterator[Batch], depth: int = 2) -> Iterator[Batch]:
    """
    Assemble upcoming batches on a background thread.

    A single worker consumes the source iterator in order, so the batch
    sequence is the same as without prefetching.
    """
    with ThreadPoolExecutor(max_workers=1) as pool:
        pending = deque(pool.submit(next, batches) for _ in range(depth))
        while True:
            batch = pending.popleft().result()
            pending.append(pool.submit(next, batches))
            yield batch
