"""Raster file IO: PNG/PPM images, PNG/PGM grayscale maps, 16-bit label maps."""

from pathlib import Path

import numpy as np
from PIL import Image

__all__ = [
    "read_rgb",
    "read_gray",
    "read_labels",
    "write_labels",
    "write_label_csv",
    "write_overlay",
]


def read_rgb(path) -> np.ndarray:
    """Read an image file as an (h, w, 3) uint8 sRGB array."""
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"))


def read_gray(path) -> np.ndarray:
    """Read a grayscale file preserving its bit depth (uint8 or uint16)."""
    with Image.open(path) as im:
        arr = np.asarray(im)
    if arr.ndim == 3:
        arr = arr[..., 0]
    if arr.dtype == np.int32:
        # Pillow reads 16-bit PNG as mode I on some paths
        arr = arr.astype(np.uint16)
    return arr


def read_labels(path) -> np.ndarray:
    """Read a label map stored as 16-bit grayscale PNG."""
    return read_gray(path).astype(np.int64)


def write_labels(path, labels: np.ndarray) -> None:
    """Write a label map as 16-bit grayscale PNG (label id = pixel value)."""
    labels = np.asarray(labels)
    if labels.min() < 0 or labels.max() > np.iinfo(np.uint16).max:
        raise ValueError("label ids must fit in uint16")
    Image.fromarray(labels.astype(np.uint16)).save(Path(path), format="PNG")


def write_label_csv(path, labels: np.ndarray) -> None:
    """Dump a label map as integer CSV, one image row per line."""
    np.savetxt(Path(path), np.asarray(labels), fmt="%d", delimiter=",")


def write_overlay(path, rgb: np.ndarray, boundary: np.ndarray, color=(255, 0, 0)) -> None:
    """Write an 8-bit RGB copy of ``rgb`` with boundary pixels painted."""
    out = np.array(rgb, dtype=np.uint8, copy=True)
    out[boundary] = color
    Image.fromarray(out).save(Path(path), format="PNG")
