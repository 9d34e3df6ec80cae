"""
No-reference sharpness metrics.

Inputs are gray images in [0, 255] (2-D) or RGB images (H, W, 3), which are
reduced to luminance first. Rows are y, columns are x. Every metric is a
sum over its valid stencil positions except ``laplacian_sharpness``, which
is a mean. Each difference term is summed over its own valid range; only
``smd2`` multiplies two terms and so uses their joint range.

Minimum sizes (H x W) per metric:
    brenner, vollath    any x 3
    laplacian           3 x 3
    smd, smd2, energy   2 x 2
    variance, entropy   1 x 1
"""

from typing import Callable, Dict, Tuple

import numpy as np

import config
from src.common.errors import MetricError


def to_gray(image: np.ndarray) -> np.ndarray:
    """
    Validate and convert an image to a float64 gray array.

    Raises:
        MetricError: Wrong dimensionality, empty or non-finite input.
    """
    if image is None:
        raise MetricError("Image is None")
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim == 3 and arr.shape[2] == 3:
        arr = arr @ np.asarray(config.LUMA_WEIGHTS, dtype=np.float64)
    elif arr.ndim != 2:
        raise MetricError(f"Expected a 2-D gray or (H, W, 3) image, got shape {arr.shape}")
    if arr.size == 0:
        raise MetricError("Image is empty")
    if not np.all(np.isfinite(arr)):
        raise MetricError("Image contains NaN or Inf values")
    return arr


def _require(gray: np.ndarray, min_h: int, min_w: int, name: str) -> None:
    h, w = gray.shape
    if h < min_h or w < min_w:
        raise MetricError(f"{name} needs at least {min_h}x{min_w} pixels, got {h}x{w}")


# =============================================================================
# Gradient-based metrics
# =============================================================================

def brenner(image: np.ndarray) -> float:
    """Sum of (I(x+2, y) - I(x, y))^2. Horizontal only."""
    gray = to_gray(image)
    _require(gray, 1, 3, "brenner")
    d = gray[:, 2:] - gray[:, :-2]
    return float(np.sum(d * d))


def laplacian_sharpness(image: np.ndarray) -> float:
    """Mean over the valid interior of the squared 4-neighbour Laplacian."""
    gray = to_gray(image)
    _require(gray, 3, 3, "laplacian")
    response = (
        gray[:-2, 1:-1] + gray[2:, 1:-1] + gray[1:-1, :-2] + gray[1:-1, 2:]
        - 4.0 * gray[1:-1, 1:-1]
    )
    return float(np.mean(response * response))


def smd(image: np.ndarray) -> float:
    """Sum of |I(x,y) - I(x,y-1)| + |I(x,y) - I(x+1,y)|."""
    gray = to_gray(image)
    _require(gray, 2, 2, "smd")
    vertical = np.abs(gray[1:, :] - gray[:-1, :])
    horizontal = np.abs(gray[:, :-1] - gray[:, 1:])
    return float(np.sum(vertical) + np.sum(horizontal))


def smd2(image: np.ndarray) -> float:
    """Sum of |I(x,y) - I(x+1,y)| * |I(x,y) - I(x,y+1)|."""
    gray = to_gray(image)
    _require(gray, 2, 2, "smd2")
    base = gray[:-1, :-1]
    horizontal = np.abs(base - gray[:-1, 1:])
    vertical = np.abs(base - gray[1:, :-1])
    return float(np.sum(horizontal * vertical))


def energy_gradient(image: np.ndarray) -> float:
    """Sum of squared forward differences in x and in y."""
    gray = to_gray(image)
    _require(gray, 2, 2, "energy")
    dx = gray[:, 1:] - gray[:, :-1]
    dy = gray[1:, :] - gray[:-1, :]
    return float(np.sum(dx * dx) + np.sum(dy * dy))


# =============================================================================
# Statistical metrics
# =============================================================================

def variance_sharpness(image: np.ndarray) -> float:
    """Sum of squared deviations from the global mean."""
    gray = to_gray(image)
    d = gray - gray.mean()
    return float(np.sum(d * d))


def vollath(image: np.ndarray) -> float:
    """Vollath F4: sum I(x,y) I(x+1,y) - sum I(x,y) I(x+2,y)."""
    gray = to_gray(image)
    _require(gray, 1, 3, "vollath")
    return float(np.sum(gray[:, :-1] * gray[:, 1:]) - np.sum(gray[:, :-2] * gray[:, 2:]))


def entropy(image: np.ndarray) -> float:
    """Shannon entropy (bits) of the 256-bin histogram of rounded intensities."""
    gray = to_gray(image)
    levels = np.clip(np.rint(gray), 0, config.ENTROPY_BINS - 1).astype(np.int64)
    counts = np.bincount(levels.ravel(), minlength=config.ENTROPY_BINS)
    p = counts[counts > 0] / levels.size
    return float(max(0.0, -np.sum(p * np.log2(p))))


# Report order
METRICS: Dict[str, Callable[[np.ndarray], float]] = {
    "brenner": brenner,
    "laplacian": laplacian_sharpness,
    "smd": smd,
    "smd2": smd2,
    "variance": variance_sharpness,
    "energy": energy_gradient,
    "vollath": vollath,
    "entropy": entropy,
}


def compute_all(image: np.ndarray) -> Tuple[Dict[str, float], Tuple[int, int]]:
    """
    All eight metrics of one image.

    Returns:
        (metric name -> value in report order, (height, width) scored).
    """
    gray = to_gray(image)
    return {name: fn(gray) for name, fn in METRICS.items()}, gray.shape
