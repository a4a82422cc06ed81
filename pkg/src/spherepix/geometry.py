"""Spherical geometry for equirectangular images.

Rows of an equirectangular raster map to circles of latitude and columns to
meridians, so a valid frame has ``w == 2 * h``.  Pixel ``(x, y)`` corresponds
to polar angle ``phi = y * pi / h`` and azimuth ``theta = 2 * x * pi / w`` on
the unit sphere (the acquisition space).  All functions here are pure and
accept scalars or numpy arrays where that makes sense.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "DegenerateFrameError",
    "GeodesicPath",
    "SearchWindow",
    "pixel_to_sphere",
    "sphere_map",
    "sphere_to_pixel",
    "cosine_dissimilarity",
    "geodesic_angle",
    "orthogonal_frame",
    "fallback_orthogonal",
    "slerp",
    "sample_geodesic",
    "row_half_extents",
    "search_window",
]

# Forward guard added before floor() in sphere_to_pixel.  arctan2/arccos of
# exact lattice points can undershoot the true angle by ~1e-13 pixels, which
# plain floor() would push into the previous pixel and break the round trip.
FLOOR_GUARD = 1e-7

# sin(phi) floor for the pole row: at y = 0 the exact map collapses every
# column onto [0, 0, 1], losing the azimuth.  Keeping a 1e-9 horizontal
# component preserves it bit-exactly (arctan2 is scale-invariant) while the
# norm stays within 5e-19 of 1.
POLE_EPS = 1e-9


class DegenerateFrameError(ValueError):
    """Raised when two directions are too close to collinear to span a plane."""


def _check_frame(w: int, h: int) -> None:
    if h < 1 or w != 2 * h:
        raise ValueError(f"invalid equirectangular frame: w={w}, h={h} (need w == 2h)")


def pixel_to_sphere(x, y, w: int, h: int) -> np.ndarray:
    """Project integer pixel coordinates onto the unit sphere.

    Args:
        x, y: pixel column(s)/row(s); scalars or equally-shaped arrays.
        w, h: image dimensions with ``w == 2 * h``.

    Returns:
        Array of shape ``(..., 3)`` of unit vectors
        ``[sin(phi)cos(theta), sin(phi)sin(theta), cos(phi)]``.
    """
    _check_frame(w, h)
    x = np.asarray(x)
    y = np.asarray(y)
    if np.any(x < 0) or np.any(x >= w) or np.any(y < 0) or np.any(y >= h):
        raise ValueError("pixel coordinate out of bounds")
    phi = y * (np.pi / h)
    theta = x * (2.0 * np.pi / w)
    sphi = np.maximum(np.sin(phi), POLE_EPS)
    out = np.stack([sphi * np.cos(theta), sphi * np.sin(theta), np.cos(phi)], axis=-1)
    return out


def sphere_map(w: int, h: int) -> np.ndarray:
    """Unit-sphere coordinates of every pixel, shape ``(h, w, 3)``."""
    _check_frame(w, h)
    ys, xs = np.mgrid[0:h, 0:w]
    return pixel_to_sphere(xs, ys, w, h)


def sphere_to_pixel(v, w: int, h: int, check: bool = True):
    """Project unit vectors back to pixel coordinates.

    Inverse of :func:`pixel_to_sphere` up to floor rounding:
    ``y = floor(arccos(z) * h / pi)`` clamped to ``[0, h-1]`` and
    ``x = floor(arctan2(vy, vx) * w / (2 pi))`` reduced modulo ``w``.

    Args:
        v: array of shape ``(..., 3)``; must be unit-norm within 1e-6.
        check: skip the norm check when the caller guarantees unit vectors.

    Returns:
        ``(x, y)`` integer coordinates (scalars for a single vector).
    """
    _check_frame(w, h)
    v = np.asarray(v, dtype=np.float64)
    if check:
        norms = np.sqrt(np.sum(v * v, axis=-1))
        if np.any(np.abs(norms - 1.0) > 1e-6):
            raise ValueError("sphere point is not unit-norm")
    z = np.clip(v[..., 2], -1.0, 1.0)
    y = np.floor(np.arccos(z) * (h / np.pi) + FLOOR_GUARD).astype(np.int64)
    y = np.clip(y, 0, h - 1)
    x = np.floor(np.arctan2(v[..., 1], v[..., 0]) * (w / (2.0 * np.pi)) + FLOOR_GUARD)
    x = np.mod(x.astype(np.int64), w)
    if x.ndim == 0:
        return int(x), int(y)
    return x, y


def cosine_dissimilarity(a, b):
    """Spherical spatial distance ``1 - <a, b>``; 0 for equal, 2 for antipodal."""
    a = np.asarray(a)
    b = np.asarray(b)
    return 1.0 - np.sum(a * b, axis=-1)


def geodesic_angle(a, b):
    """Great-circle arc angle in ``[0, pi]`` between unit vectors."""
    dot = np.clip(np.sum(np.asarray(a) * np.asarray(b), axis=-1), -1.0, 1.0)
    return np.arccos(dot)


def orthogonal_frame(p: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Gram-Schmidt step: the unit component of ``c`` orthogonal to ``p``.

    The returned vector lies in span{p, c}, so ``[p, result]`` is an
    orthonormal basis of the great-circle plane through both points.

    Raises:
        DegenerateFrameError: inputs are collinear (``|<p, c>| >= 1 - 1e-12``);
            callers substitute :func:`fallback_orthogonal`.
    """
    p = np.asarray(p, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    dot = float(np.dot(p, c))
    if abs(dot) >= 1.0 - 1e-12:
        raise DegenerateFrameError("directions are collinear; no unique great circle")
    t = c - dot * p
    return t / np.linalg.norm(t)


def fallback_orthogonal(p: np.ndarray) -> np.ndarray:
    """Deterministic unit vector orthogonal to ``p`` (smallest-axis rule)."""
    p = np.asarray(p, dtype=np.float64)
    axis = np.zeros(3)
    axis[int(np.argmin(np.abs(p)))] = 1.0
    t = axis - np.dot(p, axis) * p
    return t / np.linalg.norm(t)


def slerp(p: np.ndarray, c: np.ndarray, t) -> np.ndarray:
    """Spherical linear interpolation between unit vectors, the path oracle.

    ``slerp(p, c, 0) == p`` and ``slerp(p, c, 1) == c``; intermediate points
    trace the great-circle arc at constant angular speed.

    Raises:
        DegenerateFrameError: antipodal endpoints (arc is not unique).
    """
    p = np.asarray(p, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    dot = float(np.clip(np.dot(p, c), -1.0, 1.0))
    if dot <= -1.0 + 1e-12:
        raise DegenerateFrameError("antipodal endpoints")
    alpha = np.arccos(dot)
    t = np.asarray(t, dtype=np.float64)[..., None]
    if alpha < 1e-12:
        return np.broadcast_to(p, t.shape[:-1] + (3,)).copy()
    return (np.sin((1.0 - t) * alpha) * p + np.sin(t * alpha) * c) / np.sin(alpha)


@dataclass
class GeodesicPath:
    """Great-circle arc sampled at N pixels.

    Attributes:
        points: ``(N, 2)`` int array of (x, y) pixel coordinates.
        sphere_points: ``(N, 3)`` unit vectors of the samples.
        angle: total arc angle in radians, in ``[0, pi]``.
    """

    points: np.ndarray
    sphere_points: np.ndarray
    angle: float

    def __len__(self) -> int:
        return len(self.points)


def sample_geodesic(
    p: np.ndarray,
    c: np.ndarray,
    c_star: np.ndarray,
    alpha: float,
    n: int,
    w: int,
    h: int,
) -> GeodesicPath:
    """Sample the geodesic from ``p`` to ``c`` at uniform angle steps.

    The frame ``[p, c_star]`` must come from :func:`orthogonal_frame` (or the
    fallback); samples are ``cos(a_k) p + sin(a_k) c_star`` with
    ``a_k = k * alpha / (n - 1)``, then projected to pixels.  The first pixel
    is the source pixel and the last is the target pixel, up to floor
    rounding.

    Args:
        n: number of samples, at least 2.
    """
    if n < 2:
        raise ValueError("need at least 2 path samples")
    p = np.asarray(p, dtype=np.float64)
    c_star = np.asarray(c_star, dtype=np.float64)
    angles = np.linspace(0.0, alpha, n)
    pts = np.cos(angles)[:, None] * p + np.sin(angles)[:, None] * c_star
    xs, ys = sphere_to_pixel(pts, w, h, check=False)
    return GeodesicPath(
        points=np.stack([xs, ys], axis=1),
        sphere_points=pts,
        angle=float(alpha),
    )


def row_half_extents(S: float, w: int, h: int) -> np.ndarray:
    """Horizontal search half-extent per row: ``S / sin(phi)``.

    ``sin(phi)`` is clamped below at ``2 S / w`` so rows near the poles are
    covered entirely instead of dividing by zero; the clamp makes the
    half-extent top out at exactly ``w / 2``.
    """
    phi = np.arange(h) * (np.pi / h)
    sphi = np.maximum(np.sin(phi), 2.0 * S / w)
    return S / sphi


@dataclass
class SearchWindow:
    """Pixel region a superpixel is compared against.

    Rows span ``[y0, y1]`` inclusive; row ``y`` covers columns
    ``(x_start[y - y0] + j) % w`` for ``j < x_count[y - y0]``.
    """

    y0: int
    y1: int
    x_start: np.ndarray
    x_count: np.ndarray
    w: int

    def columns(self, y: int) -> np.ndarray:
        """Covered columns of row ``y``, already wrapped into ``[0, w)``."""
        i = y - self.y0
        return np.mod(self.x_start[i] + np.arange(self.x_count[i]), self.w)

    def contains(self, x: int, y: int) -> bool:
        if not self.y0 <= y <= self.y1:
            return False
        i = y - self.y0
        return (x - self.x_start[i]) % self.w < self.x_count[i]

    def n_pixels(self) -> int:
        return int(np.sum(self.x_count))


def search_window(bx: int, by: int, S: float, w: int, h: int) -> SearchWindow:
    """Search window around barycenter pixel ``(bx, by)``.

    Vertically the window spans ``S`` rows either side, clamped to the image;
    horizontally each row spans the half-extent of :func:`row_half_extents`,
    wrapped modulo ``w`` (rows whose span reaches ``w`` are covered entirely).
    """
    _check_frame(w, h)
    if S <= 0:
        raise ValueError("window size must be positive")
    y0 = max(0, int(np.ceil(by - S)))
    y1 = min(h - 1, int(np.floor(by + S)))
    half = row_half_extents(S, w, h)[y0 : y1 + 1]
    xs = np.ceil(bx - half).astype(np.int64)
    xe = np.floor(bx + half).astype(np.int64)
    count = np.minimum(xe - xs + 1, w)
    start = np.where(count == w, 0, np.mod(xs, w))
    return SearchWindow(y0=y0, y1=y1, x_start=start, x_count=count, w=w)
