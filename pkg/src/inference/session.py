"""
Reference-guided frame restoration.

A RestoreSession carries the state shared across the frames of one video:
the frozen generator, the reference policy and the last restored crop. Under
the default ``previous_output`` policy the reference encoder sees the
previous frame's restored crop, which keeps consecutive frames coherent.
"""

import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Tuple, Union

import cv2
import numpy as np
import torch

import config
from src.common.errors import ConfigurationError, ShapeError
from src.common.image_io import to_image, to_tensor
from src.common.logger import get_logger
from src.geometry.landmarks import LandmarkSet
from src.geometry.mouth import CropTransform, MouthInputs, paste_back, prepare_mouth
from src.model.generator import HDTRGenerator

logger = get_logger(__name__)


class ReferencePolicy(str, Enum):
    """Source of the reference crop I_r at inference time."""
    PREVIOUS_OUTPUT = "previous_output"
    FIXED_FRAME = "fixed_frame"
    SELF = "self"

    @classmethod
    def from_name(cls, name: Union[str, "ReferencePolicy"]) -> "ReferencePolicy":
        try:
            return cls(name)
        except ValueError:
            raise ConfigurationError(
                f"Unknown reference policy {name!r}; expected one of {config.REFERENCE_POLICIES}"
            ) from None


@dataclass
class FrameResult:
    """
    Outcome of restoring one frame.

    Attributes:
        frame: Full output frame, (H, W, 3) in [0, 1].
        crop: Restored 96x96 crop, None for pass-through frames.
        latency: Generator forward seconds, None when no forward ran.
        passed_through: Frame had no landmarks and was returned unchanged.
        held: Previous restored crop reused for an unchanged frame.
    """
    frame: np.ndarray
    crop: Optional[np.ndarray] = None
    latency: Optional[float] = None
    passed_through: bool = False
    held: bool = False


@dataclass
class RestoreSession:
    """
    Per-video restoration state.

    Attributes:
        generator: Frozen generator in eval mode.
        reference_policy: How I_r is chosen.
        fixed_reference: (96, 96, 3) still used by the ``fixed_frame`` policy.
        previous_output: Last restored crop; set once a frame has been
                         restored under ``previous_output``.
        device: Device the generator lives on.
        blend_width: Paste-back feather width.
    """
    generator: HDTRGenerator
    reference_policy: ReferencePolicy = ReferencePolicy(config.DEFAULT_REFERENCE_POLICY)
    fixed_reference: Optional[np.ndarray] = None
    previous_output: Optional[np.ndarray] = None
    device: torch.device = field(default_factory=lambda: torch.device("cpu"))
    blend_width: int = config.PASTE_BLEND_WIDTH
    frames_processed: int = 0
    _last_crop: Optional[np.ndarray] = field(default=None, init=False, repr=False)
    _last_transform: Optional[CropTransform] = field(default=None, init=False, repr=False)

    def __post_init__(self):
        self.reference_policy = ReferencePolicy.from_name(self.reference_policy)
        if self.reference_policy is ReferencePolicy.FIXED_FRAME:
            if self.fixed_reference is None:
                raise ConfigurationError("fixed_frame policy needs a reference image")
            self.fixed_reference = _as_crop(self.fixed_reference)
        self.generator.eval()

    def reset(self) -> None:
        """Forget per-video state before starting another video."""
        self.previous_output = None
        self.frames_processed = 0
        self._last_crop = None
        self._last_transform = None

    def select_reference(self, inputs: MouthInputs) -> np.ndarray:
        """I_r for the frame described by ``inputs``."""
        if self.reference_policy is ReferencePolicy.FIXED_FRAME:
            return self.fixed_reference
        if self.reference_policy is ReferencePolicy.PREVIOUS_OUTPUT and self.previous_output is not None:
            return self.previous_output
        # SELF, or the first frame under PREVIOUS_OUTPUT
        return inputs.crop

    @torch.no_grad()
    def run_generator(self, inputs: MouthInputs, reference: np.ndarray) -> Tuple[np.ndarray, float]:
        """Forward one frame; returns (restored crop, seconds)."""
        masked = to_tensor(inputs.masked).unsqueeze(0).to(self.device)
        contour = to_tensor(inputs.contour).unsqueeze(0).to(self.device)
        ref = to_tensor(reference).unsqueeze(0).to(self.device)

        _synchronize(self.device)
        start = time.perf_counter()
        out = self.generator(masked, contour, ref)
        _synchronize(self.device)
        latency = time.perf_counter() - start
        return to_image(out[0]), latency


def restore_frame(
    session: RestoreSession,
    frame: np.ndarray,
    landmarks: Optional[LandmarkSet],
    inputs: Optional[MouthInputs] = None,
) -> FrameResult:
    """
    Restore the mouth region of one frame.

    Args:
        session: Session holding the generator and reference state.
        frame: (H, W, 3) RGB frame in [0, 1].
        landmarks: Frame landmarks; None passes the frame through.
        inputs: Precomputed ``prepare_mouth`` output for this frame.

    Returns:
        FrameResult with the composited frame and the restored crop.
    """
    if landmarks is None:
        logger.warning(f"Frame {session.frames_processed}: no landmarks, passed through")
        session.frames_processed += 1
        return FrameResult(frame=frame, passed_through=True)

    inputs = inputs or prepare_mouth(frame, landmarks)
    policy = session.reference_policy

    held = (
        policy is ReferencePolicy.PREVIOUS_OUTPUT
        and session.previous_output is not None
        and session._last_transform == inputs.transform
        and np.array_equal(session._last_crop, inputs.crop)
    )
    if held:
        crop, latency = session.previous_output, None
    else:
        crop, latency = session.run_generator(inputs, session.select_reference(inputs))
        logger.debug(f"Frame {session.frames_processed}: forward {latency * 1000:.2f} ms")

    if policy is ReferencePolicy.PREVIOUS_OUTPUT:
        session.previous_output = crop
    session._last_crop = inputs.crop
    session._last_transform = inputs.transform
    session.frames_processed += 1

    restored = paste_back(frame, crop, inputs.transform, session.blend_width)
    return FrameResult(frame=restored, crop=crop, latency=latency, held=held)


def _as_crop(image: np.ndarray) -> np.ndarray:
    """Resize a still to the model's crop size."""
    image = np.asarray(image, dtype=np.float32)
    if image.ndim != 3 or image.shape[2] != 3:
        raise ShapeError(f"Reference still must be (H, W, 3), got {image.shape}")
    size = (config.CROP_SIZE, config.CROP_SIZE)
    if image.shape[:2] != size:
        image = cv2.resize(image, size, interpolation=cv2.INTER_AREA)
    return image


def _synchronize(device: torch.device) -> None:
    if device.type == "cuda":
        torch.cuda.synchronize(device)
