"""Segmentation quality metrics for equirectangular label maps.

Overlap and boundary metrics (ASA, boundary recall, contour density,
precision/recall curves with max F-measure) treat the raster as horizontally
periodic.  Regularity metrics work in the acquisition space: the spherical
isoperimetric compactness, and a global regularity score built from per-shape
convexity/smoothness/balance (SRC) and cross-shape consistency (SMF) after
projecting each superpixel's sphere points onto their two principal axes.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage
from scipy.spatial import ConvexHull, QhullError

from .geometry import pixel_to_sphere

__all__ = [
    "MetricsReport",
    "ShapeMask2D",
    "asa",
    "boundary_map",
    "boundary_recall",
    "contour_density",
    "pr_curve",
    "max_f",
    "spherical_area_perimeter",
    "com",
    "project_shape",
    "src",
    "smf",
    "ggr",
    "gr",
    "evaluate",
]


@dataclass
class MetricsReport:
    """Metric values for one segmentation; all scalars lie in [0, 1]."""

    asa: float
    br: float
    cd: float
    com: float
    ggr: float
    max_f: float = float("nan")
    pr_samples: list = field(default_factory=list)


def _check_same_shape(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")


def asa(labels: np.ndarray, gt: np.ndarray) -> float:
    """Achievable segmentation accuracy: area-weighted best overlap of each
    superpixel with a single ground-truth object."""
    labels = np.asarray(labels)
    gt = np.asarray(gt)
    _check_same_shape(labels, gt)
    _, li = np.unique(labels, return_inverse=True)
    gvals, gi = np.unique(gt, return_inverse=True)
    nl = li.max() + 1
    ng = len(gvals)
    overlap = np.bincount(li.ravel() * ng + gi.ravel(), minlength=nl * ng)
    return float(overlap.reshape(nl, ng).max(axis=1).sum() / labels.size)


def boundary_map(labels: np.ndarray) -> np.ndarray:
    """Pixels with any differently-labeled 4-neighbor (wrapping at the seam)."""
    labels = np.asarray(labels)
    b = labels != np.roll(labels, 1, axis=1)
    b |= labels != np.roll(labels, -1, axis=1)
    vd = labels[1:] != labels[:-1]
    b[1:] |= vd
    b[:-1] |= vd
    return b


def _distance_to(detected: np.ndarray, eps: float) -> np.ndarray:
    """Per-pixel Euclidean distance to the nearest detected pixel, computed
    with enough horizontal wrap padding to be exact below ``eps``."""
    pad = int(math.ceil(eps)) + 1
    wide = np.concatenate(
        [detected[:, -pad:], detected, detected[:, :pad]], axis=1
    )
    dist = ndimage.distance_transform_edt(~wide)
    return dist[:, pad:-pad]


def boundary_recall(labels: np.ndarray, gt: np.ndarray, eps: float = 2.0) -> float:
    """Fraction of ground-truth boundary pixels with a superpixel boundary
    pixel strictly closer than ``eps``."""
    _check_same_shape(np.asarray(labels), np.asarray(gt))
    bg = boundary_map(gt)
    if not bg.any():
        return 1.0
    bs = boundary_map(labels)
    if not bs.any():
        return 0.0
    return float((_distance_to(bs, eps)[bg] < eps).mean())


def contour_density(labels: np.ndarray) -> float:
    """Fraction of image pixels that are superpixel boundary pixels."""
    return float(boundary_map(labels).mean())


def pr_curve(label_maps: list, gt: np.ndarray, thresholds=None, eps: float = 2.0):
    """Precision/recall samples from a multi-scale boundary probability map.

    The binary boundary maps of ``label_maps`` (one per superpixel scale) are
    averaged into a probability map; each threshold keeps pixels strictly
    above it.  Precision is the fraction of kept pixels within ``eps`` of the
    ground-truth boundary, recall the usual boundary recall of the kept set.
    An empty detection scores precision 1 and recall 0 by convention.

    Returns:
        List of ``(threshold, precision, recall)`` tuples.
    """
    if not label_maps:
        raise ValueError("need at least one label map")
    if thresholds is None:
        thresholds = np.arange(1, 100) / 100.0
    prob = np.zeros(np.asarray(gt).shape, dtype=np.float64)
    for m in label_maps:
        _check_same_shape(np.asarray(m), np.asarray(gt))
        prob += boundary_map(m)
    prob /= len(label_maps)
    bg = boundary_map(gt)
    dist_to_gt = _distance_to(bg, eps) if bg.any() else None
    samples = []
    for t in thresholds:
        det = prob > t
        if not det.any():
            samples.append((float(t), 1.0, 0.0))
            continue
        pr = 1.0 if dist_to_gt is None else float((dist_to_gt[det] < eps).mean())
        br = 1.0 if not bg.any() else float((_distance_to(det, eps)[bg] < eps).mean())
        samples.append((float(t), pr, br))
    return samples


def max_f(pr_samples) -> float:
    """Maximum F-measure ``2 PR BR / (PR + BR)`` over the PR samples."""
    if not len(pr_samples):
        raise ValueError("no PR samples")
    best = 0.0
    for _, pr, br in pr_samples:
        if pr + br > 0.0:
            best = max(best, 2.0 * pr * br / (pr + br))
    return best


# ---------------------------------------------------------------------------
# Spherical compactness.
# ---------------------------------------------------------------------------


def _row_measures(w: int, h: int):
    phi = np.arange(h) * (np.pi / h)
    cell_area = np.sin(phi) * (np.pi / h) * (2.0 * np.pi / w)
    # arc between horizontally adjacent pixel centers on the same latitude
    dtheta = 2.0 * np.pi / w
    cos_arc = np.sin(phi) ** 2 * np.cos(dtheta) + np.cos(phi) ** 2
    horiz_arc = np.arccos(np.clip(cos_arc, -1.0, 1.0))
    vert_arc = np.pi / h
    return cell_area, horiz_arc, vert_arc


def spherical_area_perimeter(mask: np.ndarray, w: int, h: int):
    """Steradian area and great-circle boundary length of a pixel region.

    Area sums each member pixel's latitude-weighted cell measure; the
    perimeter sums, over boundary edges (member/non-member 4-neighbors, the
    seam included), the arc length between the two pixel centers.
    """
    mask = np.asarray(mask, dtype=bool)
    cell_area, horiz_arc, vert_arc = _row_measures(w, h)
    area = float(np.sum(mask.sum(axis=1) * cell_area))
    hcross = mask ^ np.roll(mask, -1, axis=1)
    perim = float(np.sum(hcross.sum(axis=1) * horiz_arc))
    vcross = mask[:-1] ^ mask[1:]
    perim += float(vcross.sum() * vert_arc)
    return area, perim


def com(labels: np.ndarray) -> float:
    """Area-weighted spherical isoperimetric quotient of the segmentation.

    Each region scores ``(4 pi A - A^2) / L^2`` (1 for a spherical cap of
    any size), clamped to [0, 1]; a region with no boundary scores 1.
    """
    labels = np.asarray(labels)
    h, w = labels.shape
    cell_area, horiz_arc, vert_arc = _row_measures(w, h)
    k = int(labels.max()) + 1
    pix_area = np.broadcast_to(cell_area[:, None], (h, w)).ravel()
    areas = np.bincount(labels.ravel(), weights=pix_area, minlength=k)

    perims = np.zeros(k)
    rolled = np.roll(labels, -1, axis=1)
    hdiff = labels != rolled
    harc = np.broadcast_to(horiz_arc[:, None], (h, w))
    np.add.at(perims, labels[hdiff], harc[hdiff])
    np.add.at(perims, rolled[hdiff], harc[hdiff])
    vdiff = labels[:-1] != labels[1:]
    np.add.at(perims, labels[:-1][vdiff], vert_arc)
    np.add.at(perims, labels[1:][vdiff], vert_arc)

    with np.errstate(divide="ignore", invalid="ignore"):
        q = (4.0 * np.pi * areas - areas**2) / perims**2
    q[perims == 0.0] = 1.0
    q = np.clip(q, 0.0, 1.0)
    total = areas.sum()
    return float(np.sum(q * areas) / total) if total > 0 else 1.0


# ---------------------------------------------------------------------------
# Shape projection and global regularity.
# ---------------------------------------------------------------------------


@dataclass
class ShapeMask2D:
    """Discrete 2D shadow of a superpixel in the acquisition space.

    ``mask`` is a solid boolean grid; ``origin`` and ``cell_size`` locate it
    in the PCA plane coordinates it was rasterized from.
    """

    mask: np.ndarray
    origin: tuple = (0.0, 0.0)
    cell_size: float = 1.0

    @property
    def size(self) -> int:
        return int(self.mask.sum())


def _close_mask(mask: np.ndarray) -> np.ndarray:
    padded = np.pad(mask, 2)
    closed = ndimage.binary_closing(padded, structure=np.ones((3, 3), dtype=bool))
    return closed[2:-2, 2:-2]


def project_shape(ys: np.ndarray, xs: np.ndarray, w: int, h: int) -> ShapeMask2D:
    """Project a pixel set to a solid 2D mask via its principal sphere axes.

    The pixels' unit-sphere points are centered, projected onto the two
    dominant eigenvectors of their covariance, and rasterized (uniform scale,
    longest side ``ceil(2 sqrt(n))`` cells); 3x3 morphological closing fills
    sampling gaps.  Collinear point sets fall back to a one-cell-thick
    segment.
    """
    ys = np.asarray(ys)
    xs = np.asarray(xs)
    n = len(xs)
    if n == 0:
        raise ValueError("empty pixel set")
    pts = pixel_to_sphere(xs, ys, w, h)
    ctr = pts.mean(axis=0)
    x0 = pts - ctr
    cov = x0.T @ x0 / n
    evals, evecs = np.linalg.eigh(cov)
    u = x0 @ evecs[:, 2]
    v = x0 @ evecs[:, 1]
    m = int(math.ceil(2.0 * math.sqrt(n)))
    uspan = float(u.max() - u.min())
    vspan = float(v.max() - v.min())
    extent = max(uspan, vspan)
    if extent <= 0.0:
        return ShapeMask2D(mask=np.ones((1, 1), dtype=bool))
    scale = (m - 1) / extent
    collinear = n < 3 or evals[1] <= 1e-10 * evals[2]
    ui = np.rint((u - u.min()) * scale).astype(np.int64)
    if collinear:
        vi = np.zeros(n, dtype=np.int64)
    else:
        vi = np.rint((v - v.min()) * scale).astype(np.int64)
    mask = np.zeros((int(vi.max()) + 1, int(ui.max()) + 1), dtype=bool)
    mask[vi, ui] = True
    if not collinear and min(mask.shape) > 1:
        mask = _close_mask(mask)
    return ShapeMask2D(
        mask=mask, origin=(float(u.min()), float(v.min())), cell_size=1.0 / scale
    )


def _mask_perimeter(mask: np.ndarray) -> int:
    padded = np.pad(mask, 1)
    return int(
        (padded[1:, :] != padded[:-1, :]).sum()
        + (padded[:, 1:] != padded[:, :-1]).sum()
    )


def _convex_hull_mask(mask: np.ndarray) -> np.ndarray:
    """Cells inside or on the convex hull of the mask's cell centers."""
    pts = np.argwhere(mask)
    if len(pts) < 3:
        return mask.copy()
    try:
        hull = ConvexHull(pts[:, ::-1].astype(np.float64))
    except QhullError:
        return mask.copy()
    verts = hull.points[hull.vertices]  # counterclockwise
    rows, cols = np.mgrid[0 : mask.shape[0], 0 : mask.shape[1]]
    inside = np.ones(mask.shape, dtype=bool)
    for a, b in zip(verts, np.roll(verts, -1, axis=0)):
        cross = (b[0] - a[0]) * (rows - a[1]) - (b[1] - a[1]) * (cols - a[0])
        inside &= cross >= -1e-9
    return inside


def src(shape) -> float:
    """Shape regularity: convexity times contour smoothness times balance.

    Convexity is the fill ratio of the shape's rasterized convex hull,
    smoothness the hull-to-shape perimeter ratio (at most 1), and balance the
    ratio of the smaller to the larger coordinate spread.
    """
    mask = shape.mask if isinstance(shape, ShapeMask2D) else np.asarray(shape)
    area = int(mask.sum())
    if area == 0:
        raise ValueError("empty mask")
    hull = _convex_hull_mask(mask)
    solidity = area / int(hull.sum())
    smoothness = min(1.0, _mask_perimeter(hull) / _mask_perimeter(mask))
    rows, cols = np.nonzero(mask)
    sr = float(rows.std())
    sc = float(cols.std())
    hi = max(sr, sc)
    balance = 1.0 if hi == 0.0 else min(sr, sc) / hi
    return float(solidity * smoothness * balance)


def smf(shapes: list) -> np.ndarray:
    """Similarity of each shape to the average registered shape.

    All masks are rescaled to the resolution of the largest one (their raster
    size tracks the latitude-dependent pixel density, not the physical shape)
    and registered with their centroid at a common grid center; each score is
    1 minus half the L1 gap between the shape and the mean mask, both
    normalized to unit sum (total-variation similarity in [0, 1]).
    """
    if not shapes:
        raise ValueError("no shapes")
    masks = [s.mask if isinstance(s, ShapeMask2D) else np.asarray(s) for s in shapes]
    target = max(max(m.shape) for m in masks)
    masks = [
        m
        if max(m.shape) == target
        else ndimage.zoom(m, target / max(m.shape), order=0)
        for m in masks
    ]
    gh = max(m.shape[0] for m in masks)
    gw = max(m.shape[1] for m in masks)
    grid = np.zeros((2 * gh + 1, 2 * gw + 1))
    placed = []
    for m in masks:
        rows, cols = np.nonzero(m)
        r = rows + (gh - int(round(float(rows.mean()))))
        c = cols + (gw - int(round(float(cols.mean()))))
        placed.append((r, c))
        grid[r, c] += 1.0
    grid /= len(masks)
    total = grid.sum()
    mean_n = grid / total
    out = np.empty(len(masks))
    for i, (r, c) in enumerate(placed):
        a = 1.0 / len(r)
        on_cells = mean_n[r, c]
        l1 = np.abs(on_cells - a).sum() + (1.0 - on_cells.sum())
        out[i] = 1.0 - 0.5 * l1
    return out


def _label_groups(labels: np.ndarray):
    flat = labels.ravel()
    order = np.argsort(flat, kind="stable")
    sorted_vals = flat[order]
    present, starts = np.unique(sorted_vals, return_index=True)
    bounds = np.append(starts, flat.size)
    for i, val in enumerate(present):
        yield int(val), order[bounds[i] : bounds[i + 1]]


def ggr(labels: np.ndarray, w: int = None, h: int = None) -> float:
    """Global regularity in the acquisition space.

    Every superpixel is projected with :func:`project_shape`; the score is
    the mask-size-weighted mean of per-shape SRC times SMF.
    """
    labels = np.asarray(labels)
    if h is None:
        h, w = labels.shape
    shapes = []
    for _, idx in _label_groups(labels):
        ys, xs = np.divmod(idx, w)
        shapes.append(project_shape(ys, xs, w, h))
    weights = np.array([s.size for s in shapes], dtype=np.float64)
    srcs = np.array([src(s) for s in shapes])
    smfs = smf(shapes)
    return float(np.sum(weights * srcs * smfs) / weights.sum())


def _planar_mask(ys: np.ndarray, xs: np.ndarray, w: int) -> np.ndarray:
    """Binary mask of an image-space pixel set, unwrapped across the seam."""
    present = np.zeros(w, dtype=bool)
    present[xs] = True
    if present[0] and present[-1] and not present.all():
        gap_ends = np.flatnonzero(~present)
        shift = w - (gap_ends[-1] + 1)
        xs = (xs + shift) % w
    xs = xs - xs.min()
    ys = ys - ys.min()
    mask = np.zeros((ys.max() + 1, xs.max() + 1), dtype=bool)
    mask[ys, xs] = True
    return mask


def gr(labels: np.ndarray) -> float:
    """Planar global regularity on unprojected image-space shapes."""
    labels = np.asarray(labels)
    h, w = labels.shape
    shapes = []
    for _, idx in _label_groups(labels):
        ys, xs = np.divmod(idx, w)
        shapes.append(ShapeMask2D(mask=_planar_mask(ys, xs, w)))
    weights = np.array([s.size for s in shapes], dtype=np.float64)
    srcs = np.array([src(s) for s in shapes])
    smfs = smf(shapes)
    return float(np.sum(weights * srcs * smfs) / weights.sum())


def evaluate(labels: np.ndarray, gt: np.ndarray, eps: float = 2.0) -> MetricsReport:
    """All single-segmentation metrics against a ground truth."""
    labels = np.asarray(labels)
    gt = np.asarray(gt)
    _check_same_shape(labels, gt)
    h, w = labels.shape
    return MetricsReport(
        asa=asa(labels, gt),
        br=boundary_recall(labels, gt, eps),
        cd=contour_density(labels),
        com=com(labels),
        ggr=ggr(labels, w, h),
    )
