"""
Tests for the eight no-reference sharpness metrics.

Every metric is checked against a naive double-loop oracle on random
images, against closed-form values on hand-built images, and for the
expected reaction to blur.
"""

import math
import os
import sys

import cv2
import numpy as np

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.common.errors import MetricError
from src.metrics.sharpness import (
    METRICS,
    brenner,
    compute_all,
    energy_gradient,
    entropy,
    laplacian_sharpness,
    smd,
    smd2,
    to_gray,
    variance_sharpness,
    vollath,
)


# =========================================================================
# Loop Oracles
# =========================================================================

def oracle_brenner(img):
    h, w = img.shape
    total = 0.0
    for y in range(h):
        for x in range(w - 2):
            d = img[y, x + 2] - img[y, x]
            total += d * d
    return total


def oracle_laplacian(img):
    h, w = img.shape
    total, count = 0.0, 0
    for y in range(1, h - 1):
        for x in range(1, w - 1):
            r = img[y - 1, x] + img[y + 1, x] + img[y, x - 1] + img[y, x + 1] - 4.0 * img[y, x]
            total += r * r
            count += 1
    return total / count


def oracle_smd(img):
    h, w = img.shape
    total = 0.0
    for y in range(1, h):
        for x in range(w):
            total += abs(img[y, x] - img[y - 1, x])
    for y in range(h):
        for x in range(w - 1):
            total += abs(img[y, x] - img[y, x + 1])
    return total


def oracle_smd2(img):
    h, w = img.shape
    total = 0.0
    for y in range(h - 1):
        for x in range(w - 1):
            total += abs(img[y, x] - img[y, x + 1]) * abs(img[y, x] - img[y + 1, x])
    return total


def oracle_variance(img):
    h, w = img.shape
    mean = 0.0
    for y in range(h):
        for x in range(w):
            mean += img[y, x]
    mean /= h * w
    total = 0.0
    for y in range(h):
        for x in range(w):
            total += (img[y, x] - mean) ** 2
    return total


def oracle_energy(img):
    h, w = img.shape
    total = 0.0
    for y in range(h):
        for x in range(w - 1):
            total += (img[y, x + 1] - img[y, x]) ** 2
    for y in range(h - 1):
        for x in range(w):
            total += (img[y + 1, x] - img[y, x]) ** 2
    return total


def oracle_vollath(img):
    h, w = img.shape
    first, second = 0.0, 0.0
    for y in range(h):
        for x in range(w - 1):
            first += img[y, x] * img[y, x + 1]
        for x in range(w - 2):
            second += img[y, x] * img[y, x + 2]
    return first - second


def oracle_entropy(img):
    counts = {}
    for value in img.ravel():
        level = int(min(255, max(0, round(float(value)))))
        counts[level] = counts.get(level, 0) + 1
    n = img.size
    return -sum((c / n) * math.log2(c / n) for c in counts.values())


ORACLES = {
    "brenner": oracle_brenner,
    "laplacian": oracle_laplacian,
    "smd": oracle_smd,
    "smd2": oracle_smd2,
    "variance": oracle_variance,
    "energy": oracle_energy,
    "vollath": oracle_vollath,
    "entropy": oracle_entropy,
}


def close(a: float, b: float, rel: float = 1e-9) -> bool:
    return math.isclose(a, b, rel_tol=rel, abs_tol=1e-9)


# =========================================================================
# Tests: Oracle Equivalence
# =========================================================================

def test_metrics_match_loop_oracles_on_random_images():
    rng = np.random.default_rng(2024)
    for _ in range(200):
        h, w = (int(v) for v in rng.integers(3, 17, size=2))
        img = rng.uniform(0.0, 255.0, size=(h, w))
        for name, fn in METRICS.items():
            value, expected = fn(img), ORACLES[name](img)
            assert close(value, expected), f"{name} on {h}x{w}: {value} != {expected}"


def test_metrics_match_oracles_on_integer_images():
    rng = np.random.default_rng(5)
    for _ in range(50):
        h, w = (int(v) for v in rng.integers(3, 17, size=2))
        img = rng.integers(0, 256, size=(h, w)).astype(np.float64)
        for name, fn in METRICS.items():
            assert close(fn(img), ORACLES[name](img)), name


# =========================================================================
# Tests: Closed-form Cases
# =========================================================================

def test_constant_image_values():
    for c in (0.0, 7.0, 200.0):
        img = np.full((5, 6), c)
        values, shape = compute_all(img)
        assert shape == (5, 6)
        for name in ("brenner", "laplacian", "smd", "smd2", "variance", "energy", "entropy"):
            assert values[name] == 0.0, name
        assert values["vollath"] == c * c * 5


def test_brenner_step_rows():
    img = np.tile(np.array([0.0, 0.0, 255.0, 255.0]), (3, 1))
    assert brenner(img) == 3 * 2 * 255.0 ** 2
    assert brenner(img[:1]) == 130050.0


def test_laplacian_single_bright_pixel():
    img = np.zeros((3, 3))
    img[1, 1] = 255.0
    assert laplacian_sharpness(img) == (4 * 255.0) ** 2 == 1040400.0


def test_smd_vertical_step_edge():
    img = np.tile(np.array([0.0, 0.0, 255.0, 255.0]), (3, 1))
    assert smd(img) == 3 * 255.0


def test_smd2_zero_when_rows_are_identical():
    rng = np.random.default_rng(0)
    img = np.tile(rng.uniform(0, 255, size=(1, 9)), (6, 1))
    assert smd2(img) == 0.0
    assert smd(img) > 0.0


def test_variance_two_pixels():
    assert variance_sharpness(np.array([[0.0, 255.0]])) == 32512.5


def test_energy_horizontal_only():
    img = np.array([[0.0, 255.0], [0.0, 255.0]])
    assert energy_gradient(img) == 2 * 255.0 ** 2


def test_vollath_zeros():
    assert vollath(np.zeros((4, 4))) == 0.0


def test_entropy_closed_forms():
    assert entropy(np.zeros((4, 4))) == 0.0
    half = np.zeros((4, 4))
    half[:, 2:] = 255.0
    assert close(entropy(half), 1.0)
    ramp = np.arange(256, dtype=np.float64).reshape(16, 16)
    assert close(entropy(ramp), 8.0)


def test_entropy_within_bounds():
    rng = np.random.default_rng(9)
    for _ in range(20):
        img = rng.uniform(0, 255, size=(40, 40))
        assert 0.0 <= entropy(img) <= 8.0


# =========================================================================
# Tests: Properties
# =========================================================================

def test_blur_decreases_gradient_metrics():
    rng = np.random.default_rng(77)
    decreased = {name: 0 for name in ("brenner", "energy", "laplacian", "smd", "smd2")}
    for _ in range(100):
        img = rng.uniform(0.0, 255.0, size=(64, 64))
        blurred = cv2.GaussianBlur(img, (0, 0), sigmaX=2.0)
        for name in decreased:
            if METRICS[name](blurred) < METRICS[name](img):
                decreased[name] += 1
    for name, count in decreased.items():
        assert count >= 95, f"{name} decreased on only {count}/100 images"


def test_transpose_symmetric_metrics():
    rng = np.random.default_rng(12)
    img = rng.uniform(0, 255, size=(7, 11))
    assert close(variance_sharpness(img), variance_sharpness(img.T))
    assert close(entropy(img), entropy(img.T))


def test_brenner_is_directional():
    # Horizontal-only stencil: a vertical edge is seen, its transpose is not
    img = np.tile(np.array([0.0, 0.0, 255.0, 255.0]), (4, 1))
    assert brenner(img) > 0.0
    assert brenner(img.T) == 0.0


def test_color_input_uses_luminance():
    rng = np.random.default_rng(4)
    rgb = rng.uniform(0, 255, size=(8, 9, 3))
    gray = 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]
    assert np.allclose(to_gray(rgb), gray)
    luma = to_gray(rgb)
    for name, fn in METRICS.items():
        assert fn(rgb) == fn(luma), name


# =========================================================================
# Tests: Input Validation
# =========================================================================

def test_images_below_stencil_reach_raise():
    cases = [
        (brenner, (5, 2)),
        (vollath, (5, 2)),
        (laplacian_sharpness, (2, 5)),
        (laplacian_sharpness, (5, 2)),
        (smd, (1, 5)),
        (smd2, (5, 1)),
        (energy_gradient, (1, 1)),
    ]
    for fn, shape in cases:
        try:
            fn(np.zeros(shape))
            assert False, f"{fn.__name__} should reject {shape}"
        except MetricError:
            pass


def test_minimum_sizes_accepted():
    assert brenner(np.zeros((1, 3))) == 0.0
    assert laplacian_sharpness(np.zeros((3, 3))) == 0.0
    assert smd(np.zeros((2, 2))) == 0.0
    assert variance_sharpness(np.zeros((1, 1))) == 0.0
    assert entropy(np.zeros((1, 1))) == 0.0


def test_non_finite_and_bad_rank_raise():
    bad_inputs = [
        np.full((4, 4), np.nan),
        np.array([[0.0, np.inf, 0.0]] * 3),
        np.zeros(10),
        np.zeros((4, 4, 2)),
        np.zeros((0, 4)),
    ]
    for img in bad_inputs:
        try:
            compute_all(img)
            assert False, f"Should have raised MetricError for shape {img.shape}"
        except MetricError:
            pass


# =========================================================================
# Main
# =========================================================================

if __name__ == "__main__":
    test_functions = [
        obj for name, obj in list(globals().items())
        if name.startswith("test_") and callable(obj)
    ]
    passed = 0
    failed = 0
    for test_fn in test_functions:
        try:
            test_fn()
            passed += 1
            print(f"  PASS: {test_fn.__name__}")
        except Exception as e:
            failed += 1
            print(f"  FAIL: {test_fn.__name__}: {e}")

    print(f"\n{'='*60}")
    print(f"Results: {passed} passed, {failed} failed out of {passed + failed}")
    if failed == 0:
        print("All tests passed!")
    else:
        print("Some tests failed!")
        sys.exit(1)
