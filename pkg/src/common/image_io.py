"""
Image I/O and array <-> tensor conversion.

Internal image convention: float32 numpy arrays, shape (H, W, 3), RGB
channel order, values in [0, 1]. Model tensors are (3, H, W) float32.
"""

import os

import cv2
import numpy as np
import torch

from src.common.errors import DatasetError, ShapeError


def read_image(path: str) -> np.ndarray:
    """
    Read an image file as RGB float32 in [0, 1].

    Raises:
        DatasetError: If the file cannot be decoded.
    """
    bgr = cv2.imread(path, cv2.IMREAD_COLOR)
    if bgr is None:
        raise DatasetError(f"Cannot read image: {path}")
    rgb = cv2.cvtColor(bgr, cv2.COLOR_BGR2RGB)
    return rgb.astype(np.float32) / 255.0


def to_uint8(image: np.ndarray) -> np.ndarray:
    """Quantize a [0, 1] float image to uint8."""
    return np.clip(np.rint(image * 255.0), 0, 255).astype(np.uint8)


def write_image(path: str, image: np.ndarray) -> None:
    """Write an RGB [0, 1] float image (format chosen by extension)."""
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    bgr = cv2.cvtColor(to_uint8(image), cv2.COLOR_RGB2BGR)
    if not cv2.imwrite(path, bgr):
        raise DatasetError(f"Cannot write image: {path}")


def to_tensor(image: np.ndarray) -> torch.Tensor:
    """(H, W, 3) float array -> (3, H, W) float32 tensor."""
    if image.ndim != 3 or image.shape[2] != 3:
        raise ShapeError(f"Expected (H, W, 3) image, got {image.shape}")
    return torch.from_numpy(np.ascontiguousarray(image.transpose(2, 0, 1), dtype=np.float32))


def to_image(tensor: torch.Tensor) -> np.ndarray:
    """(3, H, W) tensor -> (H, W, 3) float32 array."""
    if tensor.dim() != 3 or tensor.shape[0] != 3:
        raise ShapeError(f"Expected (3, H, W) tensor, got {tuple(tensor.shape)}")
    return tensor.detach().cpu().float().numpy().transpose(1, 2, 0).copy()
