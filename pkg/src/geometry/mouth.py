"""
Mouth-region geometry.

Turns a source frame plus its landmarks into the model inputs (aligned crop,
masked mouth I_m, lip contour I_c) and composites restored crops back into
full frames.

Conventions:
    - Frames are (H, W, 3) float32 RGB in [0, 1].
    - A crop box covers integer source pixels x in [left, right),
      y in [top, bottom). Crop pixel u samples source x = left + u / sx,
      sx = 96 / (right - left) (same for y).
    - Masks and contours are rasterized in crop space, never warped.
"""

import math
from dataclasses import dataclass, replace
from typing import Optional, Tuple

import cv2
import numpy as np
import torch

import config
from src.common.errors import ConfigurationError, GeometryError, ShapeError
from src.common.image_io import to_tensor
from src.common.logger import get_logger
from src.geometry.landmarks import LandmarkSet

logger = get_logger(__name__)


# =============================================================================
# Crop Transform
# =============================================================================

@dataclass(frozen=True)
class CropTransform:
    """
    Invertible mapping between source pixels and the crop grid.

    Attributes:
        source_box: (left, top, right, bottom) in source pixels.
        target_size: (width, height) of the crop grid.
    """
    source_box: Tuple[int, int, int, int]
    target_size: Tuple[int, int] = (config.CROP_SIZE, config.CROP_SIZE)

    def __post_init__(self):
        left, top, right, bottom = self.source_box
        if not (right > left and bottom > top):
            raise GeometryError(f"Degenerate crop box {self.source_box}")
        object.__setattr__(self, "source_box", tuple(int(v) for v in self.source_box))

    @property
    def width(self) -> int:
        return self.source_box[2] - self.source_box[0]

    @property
    def height(self) -> int:
        return self.source_box[3] - self.source_box[1]

    @property
    def scale(self) -> Tuple[float, float]:
        """Crop pixels per source pixel, (sx, sy)."""
        return self.target_size[0] / self.width, self.target_size[1] / self.height

    @property
    def offset(self) -> Tuple[int, int]:
        return self.source_box[0], self.source_box[1]

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Source (x, y) -> crop (u, v)."""
        sx, sy = self.scale
        pts = np.asarray(points, dtype=np.float64)
        return (pts - np.array(self.offset)) * np.array([sx, sy])

    def invert(self, points: np.ndarray) -> np.ndarray:
        """Crop (u, v) -> source (x, y)."""
        sx, sy = self.scale
        pts = np.asarray(points, dtype=np.float64)
        return pts / np.array([sx, sy]) + np.array(self.offset)

    def crop_to_source_matrix(self) -> np.ndarray:
        """2x3 affine mapping crop coordinates to source coordinates."""
        sx, sy = self.scale
        left, top = self.offset
        return np.array([[1.0 / sx, 0.0, left], [0.0, 1.0 / sy, top]], dtype=np.float64)

    def shifted(self, dx: int, dy: int) -> "CropTransform":
        left, top, right, bottom = self.source_box
        return replace(self, source_box=(left + dx, top + dy, right + dx, bottom + dy))


@dataclass
class MouthInputs:
    """Per-frame geometry products shared by training and inference."""
    crop: np.ndarray
    masked: np.ndarray
    contour: np.ndarray
    transform: CropTransform


@dataclass
class MouthTriplet:
    """
    Model inputs for one frame, each a (3, 96, 96) tensor in [0, 1].

    Attributes:
        masked: I_m, aligned crop with the outer-lip polygon zeroed.
        contour: I_c, rendered lip polylines.
        reference: I_r, reference crop.
        transform: Crop transform of the frame the triplet came from.
    """
    masked: torch.Tensor
    contour: torch.Tensor
    reference: torch.Tensor
    transform: CropTransform


# =============================================================================
# Operations
# =============================================================================

def compute_crop_box(
    landmarks: LandmarkSet,
    margin: float = config.CROP_MARGIN_X,
    frame_shape: Optional[Tuple[int, ...]] = None,
    margin_y: float = config.CROP_MARGIN_Y,
) -> CropTransform:
    """
    Derive the mouth crop box from four keypoints.

    Horizontally the box spans the mouth corners widened by ``margin`` times
    the mouth width on each side; vertically it spans nose tip to jaw.

    Args:
        landmarks: Frame landmarks.
        margin: Horizontal margin as a fraction of mouth width.
        frame_shape: (H, W, ...) of the source frame; the box is clamped to it.
        margin_y: Vertical margin as a fraction of nose-to-jaw height.

    Returns:
        CropTransform mapping the box to the 96x96 grid.

    Raises:
        ConfigurationError: If a margin is negative.
        GeometryError: If the box has zero width or height after clamping.
    """
    if margin < 0 or margin_y < 0:
        raise ConfigurationError(f"Crop margins must be >= 0, got ({margin}, {margin_y})")

    pts = landmarks.points
    x_a = pts[config.MOUTH_LEFT_INDEX, 0]
    x_b = pts[config.MOUTH_RIGHT_INDEX, 0]
    y_a = pts[config.NOSE_TIP_INDEX, 1]
    y_b = pts[config.JAW_INDEX, 1]

    mouth_width = abs(x_b - x_a)
    face_height = abs(y_b - y_a)

    x0 = min(x_a, x_b) - margin * mouth_width
    x1 = max(x_a, x_b) + margin * mouth_width
    y0 = min(y_a, y_b) - margin_y * face_height
    y1 = max(y_a, y_b) + margin_y * face_height

    left, top = math.floor(x0), math.floor(y0)
    right, bottom = math.ceil(x1), math.ceil(y1)

    if frame_shape is not None:
        height, width = frame_shape[0], frame_shape[1]
        left, top = max(0, left), max(0, top)
        right, bottom = min(width, right), min(height, bottom)

    if right <= left or bottom <= top:
        raise GeometryError(
            f"Degenerate mouth box ({left}, {top}, {right}, {bottom}) from landmarks"
        )

    return CropTransform((left, top, right, bottom))


def aligned_crop(frame: np.ndarray, transform: CropTransform) -> np.ndarray:
    """Bilinearly warp the box region of ``frame`` onto the crop grid."""
    _check_frame(frame)
    return cv2.warpAffine(
        frame.astype(np.float32, copy=False),
        transform.crop_to_source_matrix(),
        transform.target_size,
        flags=cv2.INTER_LINEAR | cv2.WARP_INVERSE_MAP,
        borderMode=cv2.BORDER_REPLICATE,
    )


def lip_polygon_mask(landmarks: LandmarkSet, transform: CropTransform) -> np.ndarray:
    """Boolean (96, 96) mask of the filled outer-lip polygon in crop space."""
    width, height = transform.target_size
    mask = np.zeros((height, width), dtype=np.uint8)
    polygon = _to_pixel_points(transform.apply(landmarks.outer_lip))
    cv2.fillPoly(mask, [polygon], 1)
    return mask.astype(bool)


def render_lip_contour(landmarks: LandmarkSet, transform: CropTransform) -> np.ndarray:
    """(96, 96) float32 image: closed outer and inner lip polylines at 1, else 0."""
    width, height = transform.target_size
    canvas = np.zeros((height, width), dtype=np.uint8)
    outer = _to_pixel_points(transform.apply(landmarks.outer_lip))
    inner = _to_pixel_points(transform.apply(landmarks.inner_lip))
    cv2.polylines(canvas, [outer, inner], isClosed=True, color=1, thickness=1, lineType=cv2.LINE_8)
    return canvas.astype(np.float32)


def make_mask_and_contour(
    frame: np.ndarray,
    landmarks: LandmarkSet,
    transform: CropTransform,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Build the masked mouth image I_m and the contour image I_c.

    Args:
        frame: Source frame, (H, W, 3) in [0, 1].
        landmarks: Landmarks of the same frame.
        transform: Crop transform computed from those landmarks.

    Returns:
        (masked, contour), each (96, 96, 3) float32.

    Raises:
        GeometryError: If the lip polygon falls entirely outside the crop.
    """
    crop = aligned_crop(frame, transform)
    return _mask_and_contour_from_crop(crop, landmarks, transform)


def paste_back(
    frame: np.ndarray,
    restored_crop: np.ndarray,
    transform: CropTransform,
    blend_width: int = config.PASTE_BLEND_WIDTH,
) -> np.ndarray:
    """
    Composite a restored crop into its source frame.

    The crop is warped back onto the source box and blended with a linear
    feather of ``blend_width`` pixels along the box border. Pixels outside
    the box are copied from ``frame`` unchanged.

    Args:
        frame: Source frame, (H, W, 3) in [0, 1].
        restored_crop: (96, 96, 3) crop in [0, 1].
        transform: Crop transform of the frame.
        blend_width: Feather width in source pixels (0 = hard paste).

    Returns:
        New frame array (input is not modified).

    Raises:
        ShapeError: On crop / frame shape mismatch.
    """
    _check_frame(frame)
    width, height = transform.target_size
    if restored_crop.shape != (height, width, 3):
        raise ShapeError(f"Restored crop must be ({height}, {width}, 3), got {restored_crop.shape}")

    left, top, right, bottom = transform.source_box
    if left < 0 or top < 0 or right > frame.shape[1] or bottom > frame.shape[0]:
        raise ShapeError(f"Crop box {transform.source_box} exceeds frame of shape {frame.shape}")

    sx, sy = transform.scale
    box_to_crop = np.array([[sx, 0.0, 0.0], [0.0, sy, 0.0]], dtype=np.float64)
    warped = cv2.warpAffine(
        restored_crop.astype(np.float32, copy=False),
        box_to_crop,
        (transform.width, transform.height),
        flags=cv2.INTER_LINEAR | cv2.WARP_INVERSE_MAP,
        borderMode=cv2.BORDER_REPLICATE,
    )

    alpha = feather_weights(transform.height, transform.width, blend_width)[..., None]
    out = frame.copy()
    region = out[top:bottom, left:right]
    out[top:bottom, left:right] = alpha * warped + (1.0 - alpha) * region
    return out


def feather_weights(height: int, width: int, blend_width: int) -> np.ndarray:
    """
    Per-pixel paste weights for a box.

    A pixel d rings in from the border (d = 0 outermost) gets
    min(1, (d + 1) / (blend_width + 1)).
    """
    if blend_width < 0:
        raise ConfigurationError(f"blend_width must be >= 0, got {blend_width}")
    if blend_width == 0:
        return np.ones((height, width), dtype=np.float32)
    yy, xx = np.mgrid[0:height, 0:width]
    ring = np.minimum.reduce([xx, width - 1 - xx, yy, height - 1 - yy])
    return np.minimum(1.0, (ring + 1.0) / (blend_width + 1.0)).astype(np.float32)


def prepare_mouth(
    frame: np.ndarray,
    landmarks: LandmarkSet,
    margin: float = config.CROP_MARGIN_X,
    margin_y: float = config.CROP_MARGIN_Y,
) -> MouthInputs:
    """Crop box, aligned crop, I_m and I_c for one frame."""
    transform = compute_crop_box(landmarks, margin, frame.shape, margin_y)
    crop = aligned_crop(frame, transform)
    masked, contour = _mask_and_contour_from_crop(crop, landmarks, transform)
    return MouthInputs(crop=crop, masked=masked, contour=contour, transform=transform)


def build_triplet(inputs: MouthInputs, reference: np.ndarray) -> MouthTriplet:
    """Pack geometry products and a (96, 96, 3) reference crop as tensors."""
    return MouthTriplet(
        masked=to_tensor(inputs.masked),
        contour=to_tensor(inputs.contour),
        reference=to_tensor(reference),
        transform=inputs.transform,
    )


# =============================================================================
# Helpers
# =============================================================================

def _mask_and_contour_from_crop(
    crop: np.ndarray,
    landmarks: LandmarkSet,
    transform: CropTransform,
) -> Tuple[np.ndarray, np.ndarray]:
    polygon = lip_polygon_mask(landmarks, transform)
    contour = render_lip_contour(landmarks, transform)
    if not polygon.any() and not contour.any():
        raise GeometryError(f"Lip polygon lies outside the crop box {transform.source_box}")

    masked = crop.copy()
    masked[polygon] = 0.0
    return masked, np.repeat(contour[..., None], 3, axis=2)


def _to_pixel_points(points: np.ndarray) -> np.ndarray:
    return np.rint(points).astype(np.int32).reshape(-1, 1, 2)


def _check_frame(frame: np.ndarray) -> None:
    if frame.ndim != 3 or frame.shape[2] != 3:
        raise ShapeError(f"Frame must be (H, W, 3), got {frame.shape}")
