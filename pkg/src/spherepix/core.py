"""Spherical superpixel clustering engine.

Iterative K-means over an equirectangular image in which every
pixel/superpixel comparison aggregates color and contour evidence along the
geodesic (great-circle) path between the pixel and the superpixel barycenter
in the acquisition space.  The assignment loop is JIT-compiled; a per-pass
color-distance memo plus a path-suffix cache (paths to one barycenter share
their great circle, so the tail of a path through an already-visited pixel is
reused) keep the path aggregation cheap.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .geometry import (
    FLOOR_GUARD,
    GeodesicPath,
    fallback_orthogonal,
    orthogonal_frame,
    pixel_to_sphere,
    row_half_extents,
    sample_geodesic,
    sphere_map,
    sphere_to_pixel,
)

__all__ = [
    "Params",
    "SuperpixelState",
    "PathCache",
    "hammersley_sphere",
    "init_superpixels",
    "path_color_distance",
    "path_contour_factor",
    "clustering_distance",
    "cached_path_aggregate",
    "assign_pixels",
    "update_states",
    "connected_components",
    "enforce_connectivity",
    "segment",
]

# Dot-product threshold below which two directions are treated as collinear;
# matches the orthogonal_frame precondition.
_COLLINEAR_TOL = 1e-12


@dataclass
class Params:
    """Clustering parameters.

    Attributes:
        k: target superpixel count.
        m: regularity trade-off weighting the spatial term.
        lam: weight of the pixel's own color distance versus the mean color
            distance along the geodesic path (1.0 disables the path term).
        gamma: contour-crossing penalty (0 disables the contour term).
        path_samples: number of points sampled on each geodesic path.
        iters: assignment/update rounds.
        cache_enabled: reuse per-pass color distances and path suffixes.
        feature_dims: 6 for Lab plus neighborhood-mean Lab, 3 for Lab only.
    """

    k: int
    m: float = 0.12
    lam: float = 0.5
    gamma: float = 10.0
    path_samples: int = 15
    iters: int = 5
    cache_enabled: bool = True
    feature_dims: int = 6

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError("lam must be in [0, 1]")
        if self.gamma < 0.0:
            raise ValueError("gamma must be non-negative")
        if self.path_samples < 2:
            raise ValueError("path_samples must be at least 2")
        if self.iters < 1:
            raise ValueError("iters must be at least 1")
        if self.feature_dims not in (3, 6):
            raise ValueError("feature_dims must be 3 or 6")

    def grid_interval(self, w: int) -> float:
        """Average superpixel size S = w / sqrt(k * pi)."""
        return w / math.sqrt(self.k * math.pi)


@dataclass
class SuperpixelState:
    """One cluster: spherical barycenter plus mean feature vector."""

    id: int
    barycenter: np.ndarray
    barycenter_px: tuple
    mean_feature: np.ndarray
    count: int = 0


def _radical_inverse_base2(i: np.ndarray) -> np.ndarray:
    i = np.asarray(i, dtype=np.uint64)
    out = np.zeros(i.shape, dtype=np.float64)
    f = 0.5
    while np.any(i):
        out += (i & np.uint64(1)) * f
        i = i >> np.uint64(1)
        f *= 0.5
    return out


def hammersley_sphere(k: int) -> np.ndarray:
    """Deterministic low-discrepancy point set on the unit sphere.

    Point ``i`` has ``z = 1 - 2 i / k`` and azimuth ``2 pi`` times the base-2
    radical inverse of ``i``.
    """
    i = np.arange(k)
    z = 1.0 - 2.0 * i / k
    theta = 2.0 * np.pi * _radical_inverse_base2(i)
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    return np.stack([r * np.cos(theta), r * np.sin(theta), z], axis=1)


def _init_arrays(features: np.ndarray, k: int):
    h, w = features.shape[:2]
    if k > w * h:
        raise ValueError(f"k={k} exceeds pixel count {w * h}")
    centers = hammersley_sphere(k)
    xs, ys = sphere_to_pixel(centers, w, h, check=False)
    center_px = np.stack([xs, ys], axis=1).astype(np.int64)
    mean_feats = np.ascontiguousarray(features[ys, xs].astype(np.float64))
    return centers, center_px, mean_feats


def init_superpixels(features: np.ndarray, k: int) -> list:
    """Seed ``k`` superpixels from the Hammersley point set.

    Each state starts at a Hammersley barycenter with the feature vector of
    its projected pixel and a member count of zero.
    """
    centers, center_px, mean_feats = _init_arrays(features, k)
    return [
        SuperpixelState(
            id=i,
            barycenter=centers[i].copy(),
            barycenter_px=(int(center_px[i, 0]), int(center_px[i, 1])),
            mean_feature=mean_feats[i].copy(),
            count=0,
        )
        for i in range(k)
    ]


# ---------------------------------------------------------------------------
# Reference (per-path) distance operations.  These define the clustering
# distance; the JIT kernel below reproduces them over whole search windows.
# ---------------------------------------------------------------------------


def _feature_distance(fa: np.ndarray, fb: np.ndarray) -> float:
    s = 0.0
    for t in range(len(fa)):
        d = float(fa[t]) - float(fb[t])
        s += d * d
    return s


def path_color_distance(
    p_feature: np.ndarray,
    mean_feature: np.ndarray,
    path: GeodesicPath,
    features: np.ndarray,
    lam: float,
) -> float:
    """Color distance blending the pixel itself with its geodesic path.

    ``lam * d_c(p) + (1 - lam) * mean over path pixels of d_c(q)`` where
    ``d_c`` is the squared Euclidean feature distance to the superpixel mean.
    """
    dcp = _feature_distance(p_feature, mean_feature)
    acc = 0.0
    for x, y in path.points:
        acc += _feature_distance(features[y, x], mean_feature)
    return lam * dcp + (1.0 - lam) * acc / len(path)


def path_contour_factor(path: GeodesicPath, contour, gamma: float) -> float:
    """Multiplicative penalty ``1 + gamma * max contour value on the path``."""
    if contour is None or gamma == 0.0:
        return 1.0
    best = 0.0
    for x, y in path.points:
        c = float(contour[y, x])
        if c > best:
            best = c
    return 1.0 + gamma * best


def clustering_distance(
    px: int,
    py: int,
    state: SuperpixelState,
    path: GeodesicPath,
    features: np.ndarray,
    contour,
    params: Params,
    w: int,
    h: int,
) -> float:
    """Full pixel-to-superpixel distance.

    ``(path color distance + (1 - <p, barycenter>) * m^2 / S^2)`` times the
    contour factor of the path.  With ``lam=1``, ``gamma=0`` and 3-dim
    features this is exactly the cosine-distance spherical K-means form.
    """
    p_sphere = pixel_to_sphere(px, py, w, h)
    d_s = 1.0 - float(np.dot(p_sphere, state.barycenter))
    s = params.grid_interval(w)
    dc = path_color_distance(
        features[py, px], state.mean_feature, path, features, params.lam
    )
    return (dc + d_s * params.m**2 / s**2) * path_contour_factor(
        path, contour, params.gamma
    )


class PathCache:
    """Per-superpixel-pass cache of path suffix aggregates.

    ``entries`` maps a flat pixel index to ``(suffix color-distance sum,
    suffix sample count, suffix contour max)`` for the geodesic tail running
    from that pixel to the current barycenter.  Entries are only valid while
    the barycenter they converge to is fixed, so the cache must be cleared
    between superpixel passes.  ``dc_memo`` memoizes per-pixel color
    distances to the current superpixel mean over the same scope.
    """

    def __init__(self):
        self.entries: dict = {}
        self.dc_memo: dict = {}

    def clear(self) -> None:
        self.entries.clear()
        self.dc_memo.clear()


def cached_path_aggregate(
    path: GeodesicPath,
    mean_feature: np.ndarray,
    features: np.ndarray,
    contour,
    cache: PathCache,
):
    """Aggregate color and contour evidence along a path through the cache.

    Walks the path from its source pixel toward the barycenter.  At the first
    pixel that already holds a suffix entry the stored tail is spliced in and
    the walk stops; afterwards every freshly walked pixel gets a suffix entry
    of its own (sample counts are capped at the nominal path length, with the
    stored sum rescaled so the suffix mean is preserved).

    Returns:
        ``(mean color distance, max contour)`` over the (possibly spliced)
        path samples.
    """
    h, w = features.shape[:2]
    n = len(path)
    fresh_idx = []
    fresh_dc = []
    fresh_c = []
    hit_sum = 0.0
    hit_cnt = 0.0
    hit_max = 0.0
    for x, y in path.points:
        qi = int(y) * w + int(x)
        if qi in cache.entries:
            hit_sum, hit_cnt, hit_max = cache.entries[qi]
            break
        if qi not in cache.dc_memo:
            cache.dc_memo[qi] = _feature_distance(features[y, x], mean_feature)
        fresh_idx.append(qi)
        fresh_dc.append(cache.dc_memo[qi])
        fresh_c.append(float(contour[y, x]) if contour is not None else 0.0)
    total_sum = hit_sum
    total_cnt = hit_cnt + len(fresh_idx)
    total_max = hit_max
    for dc in fresh_dc:
        total_sum += dc
    for c in fresh_c:
        if c > total_max:
            total_max = c
    # store suffix entries, accumulated in walk order so that a later full
    # hit reproduces the fresh result bit for bit; duplicated pixels keep
    # their first (earliest) suffix
    for k in range(len(fresh_idx)):
        if fresh_idx[k] in cache.entries:
            continue
        acc, cnt, mx = hit_sum, hit_cnt, hit_max
        for l in range(k, len(fresh_idx)):
            acc += fresh_dc[l]
            cnt += 1.0
            if fresh_c[l] > mx:
                mx = fresh_c[l]
        stored_cnt = min(cnt, float(n))
        cache.entries[fresh_idx[k]] = (acc * (stored_cnt / cnt), stored_cnt, mx)
    return total_sum / total_cnt, total_max


def build_path(
    px: int, py: int, state: SuperpixelState, n: int, w: int, h: int
) -> GeodesicPath:
    """Geodesic path from a pixel to a superpixel barycenter.

    Coincident directions collapse to the pixel repeated ``n`` times;
    antipodal ones take a deterministic orthogonal frame.
    """
    p = pixel_to_sphere(px, py, w, h)
    c = state.barycenter
    dot = float(np.clip(np.dot(p, c), -1.0, 1.0))
    if dot >= 1.0 - _COLLINEAR_TOL:
        pts = np.tile([px, py], (n, 1))
        return GeodesicPath(points=pts, sphere_points=np.tile(p, (n, 1)), angle=0.0)
    if dot <= -1.0 + _COLLINEAR_TOL:
        c_star = fallback_orthogonal(p)
    else:
        c_star = orthogonal_frame(p, c)
    return sample_geodesic(p, c, c_star, math.acos(dot), n, w, h)


# ---------------------------------------------------------------------------
# JIT assignment kernel.
# ---------------------------------------------------------------------------


@njit(cache=True)
def _assign_iteration(
    sphere,
    feats,
    contour,
    centers,
    mean_feats,
    center_px,
    S,
    half_ext,
    m2_s2,
    lam,
    gamma,
    n_path,
    use_cache,
    best_d,
    best_id,
    memo_val,
    memo_stamp,
    cache_sum,
    cache_len,
    cache_max,
    cache_stamp,
    stamp_base,
    w,
    h,
):
    n_sp = centers.shape[0]
    dims = feats.shape[1]
    y_scale = h / np.pi
    x_scale = w / (2.0 * np.pi)
    fresh_idx = np.empty(n_path, np.int64)
    fresh_dc = np.empty(n_path, np.float64)
    fresh_c = np.empty(n_path, np.float64)
    for i in range(n_sp):
        stamp = stamp_base + i + 1
        b0 = centers[i, 0]
        b1 = centers[i, 1]
        b2 = centers[i, 2]
        bx = center_px[i, 0]
        by = center_px[i, 1]
        y0 = int(math.ceil(by - S))
        if y0 < 0:
            y0 = 0
        y1 = int(math.floor(by + S))
        if y1 > h - 1:
            y1 = h - 1
        for y in range(y0, y1 + 1):
            half = half_ext[y]
            xs = int(math.ceil(bx - half))
            xe = int(math.floor(bx + half))
            count = xe - xs + 1
            if count >= w:
                count = w
                xstart = 0
            else:
                xstart = xs % w
            row = y * w
            for j in range(count):
                x = xstart + j
                if x >= w:
                    x -= w
                pi = row + x
                if memo_stamp[pi] != stamp:
                    acc = 0.0
                    for t in range(dims):
                        df = feats[pi, t] - mean_feats[i, t]
                        acc += df * df
                    memo_val[pi] = acc
                    memo_stamp[pi] = stamp
                dcp = memo_val[pi]
                p0 = sphere[pi, 0]
                p1 = sphere[pi, 1]
                p2 = sphere[pi, 2]
                dot = p0 * b0 + p1 * b1 + p2 * b2
                if dot > 1.0:
                    dot = 1.0
                elif dot < -1.0:
                    dot = -1.0
                d_s = 1.0 - dot

                # geodesic path aggregation with suffix splicing
                if use_cache and cache_stamp[pi] == stamp:
                    total_sum = cache_sum[pi]
                    total_cnt = cache_len[pi]
                    total_max = cache_max[pi]
                elif dot >= 1.0 - _COLLINEAR_TOL:
                    # pixel sits on the barycenter direction: the path is
                    # this pixel repeated n_path times
                    total_sum = dcp * n_path
                    total_cnt = float(n_path)
                    total_max = contour[pi]
                    if use_cache:
                        cache_sum[pi] = total_sum
                        cache_len[pi] = total_cnt
                        cache_max[pi] = total_max
                        cache_stamp[pi] = stamp
                else:
                    hit_sum = 0.0
                    hit_cnt = 0.0
                    hit_max = 0.0
                    fresh_n = 0
                    if dot <= -1.0 + _COLLINEAR_TOL:
                        # antipodal: orthogonal frame from the smallest axis
                        a0 = 0.0
                        a1 = 0.0
                        a2 = 0.0
                        ap0 = abs(p0)
                        ap1 = abs(p1)
                        ap2 = abs(p2)
                        if ap0 <= ap1 and ap0 <= ap2:
                            a0 = 1.0
                        elif ap1 <= ap2:
                            a1 = 1.0
                        else:
                            a2 = 1.0
                        ad = a0 * p0 + a1 * p1 + a2 * p2
                        t0 = a0 - ad * p0
                        t1 = a1 - ad * p1
                        t2 = a2 - ad * p2
                    else:
                        t0 = b0 - dot * p0
                        t1 = b1 - dot * p1
                        t2 = b2 - dot * p2
                    tn = math.sqrt(t0 * t0 + t1 * t1 + t2 * t2)
                    c0 = t0 / tn
                    c1 = t1 / tn
                    c2 = t2 / tn
                    step = math.acos(dot) / (n_path - 1)
                    # rotate (ca, sa) by `step` per sample instead of calling
                    # cos/sin at every path point
                    cd = math.cos(step)
                    sd = math.sin(step)
                    ca = 1.0
                    sa = 0.0
                    for k in range(n_path):
                        if k == 0:
                            qi = pi
                        else:
                            ca_new = ca * cd - sa * sd
                            sa = sa * cd + ca * sd
                            ca = ca_new
                            u0 = ca * p0 + sa * c0
                            u1 = ca * p1 + sa * c1
                            u2 = ca * p2 + sa * c2
                            if u2 > 1.0:
                                u2 = 1.0
                            elif u2 < -1.0:
                                u2 = -1.0
                            qy = int(math.floor(math.acos(u2) * y_scale + FLOOR_GUARD))
                            if qy > h - 1:
                                qy = h - 1
                            qx = int(
                                math.floor(math.atan2(u1, u0) * x_scale + FLOOR_GUARD)
                            )
                            qx = qx % w
                            qi = qy * w + qx
                        if use_cache and cache_stamp[qi] == stamp:
                            hit_sum = cache_sum[qi]
                            hit_cnt = cache_len[qi]
                            hit_max = cache_max[qi]
                            break
                        if memo_stamp[qi] != stamp:
                            acc = 0.0
                            for t in range(dims):
                                df = feats[qi, t] - mean_feats[i, t]
                                acc += df * df
                            memo_val[qi] = acc
                            memo_stamp[qi] = stamp
                        fresh_idx[fresh_n] = qi
                        fresh_dc[fresh_n] = memo_val[qi]
                        fresh_c[fresh_n] = contour[qi]
                        fresh_n += 1

                    total_sum = hit_sum
                    total_cnt = hit_cnt
                    total_max = hit_max
                    for k in range(fresh_n):
                        total_sum += fresh_dc[k]
                        total_cnt += 1.0
                        if fresh_c[k] > total_max:
                            total_max = fresh_c[k]

                    # store suffix entries in walk order so a later full hit
                    # reproduces the fresh result bit for bit; duplicated
                    # pixels keep their first (earliest) suffix
                    if use_cache and fresh_n > 0:
                        for k in range(fresh_n):
                            qi = fresh_idx[k]
                            if cache_stamp[qi] == stamp:
                                continue
                            acc = hit_sum
                            cnt = hit_cnt
                            mx = hit_max
                            for l in range(k, fresh_n):
                                acc += fresh_dc[l]
                                cnt += 1.0
                                if fresh_c[l] > mx:
                                    mx = fresh_c[l]
                            stored_cnt = cnt
                            if stored_cnt > n_path:
                                stored_cnt = float(n_path)
                            cache_sum[qi] = acc * (stored_cnt / cnt)
                            cache_len[qi] = stored_cnt
                            cache_max[qi] = mx
                            cache_stamp[qi] = stamp

                dc_path = lam * dcp + (1.0 - lam) * (total_sum / total_cnt)
                dist = (dc_path + d_s * m2_s2) * (1.0 + gamma * total_max)
                if dist < best_d[pi]:
                    best_d[pi] = dist
                    best_id[pi] = i


def _prepare_feats(features: np.ndarray) -> np.ndarray:
    h, w = features.shape[:2]
    return np.ascontiguousarray(
        features.reshape(h * w, features.shape[2]).astype(np.float64)
    )


def assign_pixels(
    states: list,
    features: np.ndarray,
    contour,
    params: Params,
    sphere: np.ndarray = None,
    cache_arrays=None,
    stamp_base: int = 0,
):
    """One assignment pass: label every pixel with its best superpixel.

    Each superpixel scans its search window and every window pixel keeps the
    superpixel minimizing the clustering distance (ties go to the lowest id).
    Pixels covered by no window fall back to the spatially nearest barycenter.

    Returns:
        ``(ids, dists)``: int32 and float64 arrays of shape ``(h, w)``.
    """
    h, w = features.shape[:2]
    feats = _prepare_feats(features)
    if sphere is None:
        sphere = sphere_map(w, h).reshape(-1, 3)
    centers = np.ascontiguousarray([s.barycenter for s in states], dtype=np.float64)
    mean_feats = np.ascontiguousarray(
        [s.mean_feature for s in states], dtype=np.float64
    )
    center_px = np.ascontiguousarray(
        [[s.barycenter_px[0], s.barycenter_px[1]] for s in states], dtype=np.int64
    )
    S = params.grid_interval(w)
    cmap = (
        np.zeros(h * w)
        if contour is None
        else np.ascontiguousarray(contour, dtype=np.float64).ravel()
    )
    if cache_arrays is None:
        cache_arrays = _fresh_cache_arrays(h * w)
    best_d = np.full(h * w, np.inf)
    best_id = np.full(h * w, -1, dtype=np.int32)
    _assign_iteration(
        sphere,
        feats,
        cmap,
        centers,
        mean_feats,
        center_px,
        S,
        row_half_extents(S, w, h),
        params.m**2 / S**2,
        params.lam,
        params.gamma,
        params.path_samples,
        params.cache_enabled,
        best_d,
        best_id,
        *cache_arrays,
        stamp_base,
        w,
        h,
    )
    _assign_uncovered(best_id, best_d, sphere, centers)
    return best_id.reshape(h, w), best_d.reshape(h, w)


def _fresh_cache_arrays(n: int):
    return (
        np.zeros(n),
        np.zeros(n, dtype=np.int64),
        np.zeros(n),
        np.zeros(n),
        np.zeros(n),
        np.zeros(n, dtype=np.int64),
    )


def _assign_uncovered(best_id, best_d, sphere, centers):
    missing = np.flatnonzero(best_id < 0)
    if missing.size:
        dots = sphere[missing] @ centers.T
        best_id[missing] = np.argmax(dots, axis=1).astype(np.int32)
        best_d[missing] = 1.0 - dots[np.arange(missing.size), best_id[missing]]


def update_states(
    labels: np.ndarray, features: np.ndarray, states: list, w: int, h: int
) -> list:
    """Recompute each superpixel's barycenter and mean feature vector.

    The barycenter is the normalized mean of member sphere points; empty
    superpixels keep their previous state, as does the barycenter when the
    member mean nearly cancels (norm below 1e-9).
    """
    centers = np.array([s.barycenter for s in states], dtype=np.float64)
    center_px = np.array(
        [[s.barycenter_px[0], s.barycenter_px[1]] for s in states], dtype=np.int64
    )
    mean_feats = np.array([s.mean_feature for s in states], dtype=np.float64)
    sphere = sphere_map(w, h).reshape(-1, 3)
    feats = _prepare_feats(features)
    centers, center_px, mean_feats, counts = _update_arrays(
        labels, feats, sphere, centers, center_px, mean_feats, w, h
    )
    return [
        SuperpixelState(
            id=i,
            barycenter=centers[i].copy(),
            barycenter_px=(int(center_px[i, 0]), int(center_px[i, 1])),
            mean_feature=mean_feats[i].copy(),
            count=int(counts[i]),
        )
        for i in range(len(states))
    ]


def _update_arrays(labels, feats, sphere, centers, center_px, mean_feats, w, h):
    k = centers.shape[0]
    flat = np.asarray(labels).ravel()
    counts = np.bincount(flat, minlength=k)[:k]
    sums3 = np.empty((k, 3))
    for c in range(3):
        sums3[:, c] = np.bincount(flat, weights=sphere[:, c], minlength=k)[:k]
    dims = feats.shape[1]
    sumsf = np.empty((k, dims))
    for c in range(dims):
        sumsf[:, c] = np.bincount(flat, weights=feats[:, c], minlength=k)[:k]
    new_centers = centers.copy()
    new_px = center_px.copy()
    new_feats = mean_feats.copy()
    nonempty = counts > 0
    new_feats[nonempty] = sumsf[nonempty] / counts[nonempty, None]
    norms = np.linalg.norm(sums3, axis=1)
    ok = nonempty & (norms > 1e-9)
    new_centers[ok] = sums3[ok] / norms[ok, None]
    if np.any(ok):
        xs, ys = sphere_to_pixel(new_centers[ok], w, h, check=False)
        new_px[ok, 0] = xs
        new_px[ok, 1] = ys
    return new_centers, new_px, new_feats, counts


@njit(cache=True)
def _wrap_components(flat_labels, w, h):
    """Connected components under 4-adjacency with horizontal wrap."""
    n = w * h
    parent = np.arange(n, dtype=np.int64)
    for y in range(h):
        row = y * w
        for x in range(w):
            i = row + x
            li = flat_labels[i]
            j = row + (x - 1 if x > 0 else w - 1)
            if flat_labels[j] == li:
                ri = i
                while parent[ri] != ri:
                    parent[ri] = parent[parent[ri]]
                    ri = parent[ri]
                rj = j
                while parent[rj] != rj:
                    parent[rj] = parent[parent[rj]]
                    rj = parent[rj]
                if ri < rj:
                    parent[rj] = ri
                elif rj < ri:
                    parent[ri] = rj
            if y > 0:
                j = i - w
                if flat_labels[j] == li:
                    ri = i
                    while parent[ri] != ri:
                        parent[ri] = parent[parent[ri]]
                        ri = parent[ri]
                    rj = j
                    while parent[rj] != rj:
                        parent[rj] = parent[parent[rj]]
                        rj = parent[rj]
                    if ri < rj:
                        parent[rj] = ri
                    elif rj < ri:
                        parent[ri] = rj
    comp_of_root = np.full(n, -1, dtype=np.int64)
    out = np.empty(n, dtype=np.int64)
    n_comp = 0
    for i in range(n):
        r = i
        while parent[r] != r:
            parent[r] = parent[parent[r]]
            r = parent[r]
        if comp_of_root[r] < 0:
            comp_of_root[r] = n_comp
            n_comp += 1
        out[i] = comp_of_root[r]
    return out


def connected_components(labels: np.ndarray) -> np.ndarray:
    """Component id per pixel; same-label 4-neighbors (wrapping across the
    left/right seam) share a component.  Ids follow raster-scan order."""
    labels = np.ascontiguousarray(labels, dtype=np.int64)
    h, w = labels.shape
    return _wrap_components(labels.ravel(), w, h).reshape(h, w)


@njit(cache=True)
def _enforce_kernel(flat_lab, w, h, min_size):
    n = w * h
    n_lab = 0
    for i in range(n):
        if flat_lab[i] >= n_lab:
            n_lab = flat_lab[i] + 1
    neigh_count = np.zeros(n_lab, dtype=np.int64)
    while True:
        comp = _wrap_components(flat_lab, w, h)
        n_comp = 0
        for i in range(n):
            if comp[i] >= n_comp:
                n_comp = comp[i] + 1
        sizes = np.zeros(n_comp, dtype=np.int64)
        comp_label = np.empty(n_comp, dtype=np.int64)
        for i in range(n):
            sizes[comp[i]] += 1
            comp_label[comp[i]] = flat_lab[i]
        # largest component per label (ties keep the earlier component)
        best_comp = np.full(n_lab, -1, dtype=np.int64)
        for cid in range(n_comp):
            lab = comp_label[cid]
            if best_comp[lab] < 0 or sizes[cid] > sizes[best_comp[lab]]:
                best_comp[lab] = cid
        # group pixel indices by component (counting sort, raster order)
        offsets = np.zeros(n_comp + 1, dtype=np.int64)
        for cid in range(n_comp):
            offsets[cid + 1] = offsets[cid] + sizes[cid]
        cursor = offsets[:-1].copy()
        pix = np.empty(n, dtype=np.int64)
        for i in range(n):
            pix[cursor[comp[i]]] = i
            cursor[comp[i]] += 1

        changed = False
        pending = False
        for cid in range(n_comp):
            if best_comp[comp_label[cid]] == cid and sizes[cid] >= min_size:
                continue
            pending = True
            own = comp_label[cid]
            touched_n = 0
            touched = np.empty(4 * sizes[cid], dtype=np.int64)
            for s in range(offsets[cid], offsets[cid + 1]):
                i = pix[s]
                y = i // w
                x = i - y * w
                for d in range(4):
                    if d == 0:
                        nx = x + 1 if x + 1 < w else 0
                        ny = y
                    elif d == 1:
                        nx = x - 1 if x > 0 else w - 1
                        ny = y
                    elif d == 2:
                        nx = x
                        ny = y + 1
                    else:
                        nx = x
                        ny = y - 1
                    if ny < 0 or ny >= h:
                        continue
                    lbl = flat_lab[ny * w + nx]
                    if lbl != own:
                        if neigh_count[lbl] == 0:
                            touched[touched_n] = lbl
                            touched_n += 1
                        neigh_count[lbl] += 1
            if touched_n > 0:
                best = -1
                best_cnt = 0
                for t in range(touched_n):
                    lbl = touched[t]
                    c = neigh_count[lbl]
                    if c > best_cnt or (c == best_cnt and lbl < best):
                        best = lbl
                        best_cnt = c
                    neigh_count[lbl] = 0
                for s in range(offsets[cid], offsets[cid + 1]):
                    flat_lab[pix[s]] = best
                changed = True
        if not pending or not changed:
            return flat_lab


def enforce_connectivity(labels: np.ndarray, min_size: int) -> np.ndarray:
    """Make every label one wrap-aware 4-connected component.

    For each label all components except its largest are relabeled to their
    most frequent adjacent label, as is any component smaller than
    ``min_size``.  Ties prefer the smaller component/label id, keeping the
    result deterministic.
    """
    labels = np.asarray(labels)
    if labels.min() < 0:
        raise ValueError("labels must be non-negative")
    h, w = labels.shape
    flat = np.ascontiguousarray(labels, dtype=np.int64).ravel().copy()
    return _enforce_kernel(flat, w, h, min_size).reshape(h, w)


def segment(lab: np.ndarray, params: Params, contour: np.ndarray = None):
    """Segment an equirectangular CIELab image into spherical superpixels.

    Runs Hammersley initialization, ``params.iters`` rounds of geodesic
    path-based assignment and state updates, then connectivity enforcement
    (absorption threshold ``S^2 / 4`` pixels).  Deterministic for fixed
    inputs.

    Args:
        lab: ``(h, w, 3)`` CIELab image with ``w == 2 * h``.
        params: clustering parameters.
        contour: optional ``(h, w)`` contour prior in [0, 1].

    Returns:
        ``(labels, states)``: int32 label map and the final
        :class:`SuperpixelState` list (refreshed against the returned labels).
    """
    from .features import build_features

    lab = np.asarray(lab, dtype=np.float64)
    h, w = lab.shape[:2]
    if w != 2 * h:
        raise ValueError(f"not equirectangular: w={w}, h={h}")
    if contour is not None:
        contour = np.asarray(contour, dtype=np.float64)
        if contour.shape != (h, w):
            raise ValueError("contour map dimensions do not match the image")
        if contour.min() < 0.0 or contour.max() > 1.0:
            raise ValueError("contour values must lie in [0, 1]")

    features = build_features(lab)
    if params.feature_dims == 3:
        features = np.ascontiguousarray(features[..., :3])
    feats = _prepare_feats(features)
    sphere = sphere_map(w, h).reshape(-1, 3)
    centers, center_px, mean_feats = _init_arrays(features, params.k)

    S = params.grid_interval(w)
    half_ext = row_half_extents(S, w, h)
    m2_s2 = params.m**2 / S**2
    cmap = np.zeros(h * w) if contour is None else contour.ravel()
    cache_arrays = _fresh_cache_arrays(h * w)
    best_d = np.empty(h * w)
    best_id = np.empty(h * w, dtype=np.int32)

    for it in range(params.iters):
        best_d.fill(np.inf)
        best_id.fill(-1)
        _assign_iteration(
            sphere,
            feats,
            cmap,
            centers,
            mean_feats,
            center_px,
            S,
            half_ext,
            m2_s2,
            params.lam,
            params.gamma,
            params.path_samples,
            params.cache_enabled,
            best_d,
            best_id,
            *cache_arrays,
            it * params.k,
            w,
            h,
        )
        _assign_uncovered(best_id, best_d, sphere, centers)
        centers, center_px, mean_feats, _ = _update_arrays(
            best_id, feats, sphere, centers, center_px, mean_feats, w, h
        )

    labels = enforce_connectivity(
        best_id.reshape(h, w), max(1, int(S * S / 4))
    )
    centers, center_px, mean_feats, counts = _update_arrays(
        labels, feats, sphere, centers, center_px, mean_feats, w, h
    )
    states = [
        SuperpixelState(
            id=i,
            barycenter=centers[i].copy(),
            barycenter_px=(int(center_px[i, 0]), int(center_px[i, 1])),
            mean_feature=mean_feats[i].copy(),
            count=int(counts[i]),
        )
        for i in range(params.k)
    ]
    return labels.astype(np.int32), states
