"""Color conversion and per-pixel feature construction.

The clustering engine works on a 6-dimensional feature space: the pixel's own
CIELab triplet plus the mean CIELab of its 3x3 neighborhood.  Neighborhoods
wrap horizontally (the frame is a 360 degree panorama) and clamp vertically.
"""

import numpy as np

__all__ = ["FormatError", "srgb_to_lab", "build_features", "scale_contour", "load_contour_map"]

# sRGB -> XYZ (D65, 2 degree observer)
_RGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
_WHITE = np.array([0.95047, 1.0, 1.08883])


class FormatError(ValueError):
    """Bad input raster: wrong dimensions, depth, or aspect ratio."""


def srgb_to_lab(rgb: np.ndarray) -> np.ndarray:
    """Convert an 8-bit sRGB equirectangular raster to CIELab.

    Args:
        rgb: ``(h, w, 3)`` uint8 array with ``w == 2 * h``.

    Returns:
        ``(h, w, 3)`` float64 Lab array; L in [0, 100], a/b roughly [-128, 127].
    """
    rgb = np.asarray(rgb)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise FormatError(f"expected (h, w, 3) raster, got {rgb.shape}")
    h, w = rgb.shape[:2]
    if w != 2 * h:
        raise FormatError(f"not equirectangular: w={w}, h={h} (need w == 2h)")
    srgb = rgb.astype(np.float64) / 255.0
    linear = np.where(srgb > 0.04045, ((srgb + 0.055) / 1.055) ** 2.4, srgb / 12.92)
    xyz = linear @ _RGB_TO_XYZ.T / _WHITE
    cube_root = 6.0 / 29.0
    f = np.where(
        xyz > cube_root**3, np.cbrt(xyz), xyz / (3.0 * cube_root**2) + 4.0 / 29.0
    )
    lab = np.empty_like(xyz)
    lab[..., 0] = 116.0 * f[..., 1] - 16.0
    lab[..., 1] = 500.0 * (f[..., 0] - f[..., 1])
    lab[..., 2] = 200.0 * (f[..., 1] - f[..., 2])
    return lab


def build_features(lab: np.ndarray) -> np.ndarray:
    """Per-pixel 6-vector: own Lab (dims 0-2) plus 3x3-mean Lab (dims 3-5).

    The 3x3 mean wraps across the left/right image seam and replicates the
    top/bottom rows, so dims 3-5 always stay inside the neighborhood's value
    envelope.
    """
    lab = np.asarray(lab, dtype=np.float64)
    h, w = lab.shape[:2]
    padded = np.pad(lab, ((1, 1), (0, 0), (0, 0)), mode="edge")
    padded = np.pad(padded, ((0, 0), (1, 1), (0, 0)), mode="wrap")
    mean = np.zeros_like(lab)
    for dy in range(3):
        for dx in range(3):
            mean += padded[dy : dy + h, dx : dx + w]
    mean /= 9.0
    return np.concatenate([lab, mean], axis=2)


def scale_contour(gray: np.ndarray) -> np.ndarray:
    """Scale an integer grayscale raster into contour probabilities in [0, 1]."""
    gray = np.asarray(gray)
    if np.issubdtype(gray.dtype, np.integer):
        return gray.astype(np.float64) / float(np.iinfo(gray.dtype).max)
    out = gray.astype(np.float64)
    if out.size and (out.min() < 0.0 or out.max() > 1.0):
        raise FormatError("float contour map must already be in [0, 1]")
    return out


def load_contour_map(path, w: int, h: int) -> np.ndarray:
    """Load a grayscale contour-prior file and scale it to [0, 1].

    Raises:
        FormatError: the raster does not match the image dimensions.
    """
    from .image_io import read_gray

    gray = read_gray(path)
    if gray.shape != (h, w):
        raise FormatError(
            f"contour map is {gray.shape[1]}x{gray.shape[0]}, image is {w}x{h}"
        )
    return scale_contour(gray)
