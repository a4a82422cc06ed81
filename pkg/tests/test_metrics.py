"""Segmentation metric tests."""

import numpy as np
import pytest

from spherepix.core import hammersley_sphere
from spherepix.geometry import geodesic_angle, pixel_to_sphere, sphere_map
from spherepix.metrics import (
    ShapeMask2D,
    asa,
    boundary_map,
    boundary_recall,
    com,
    contour_density,
    evaluate,
    ggr,
    gr,
    max_f,
    pr_curve,
    project_shape,
    smf,
    spherical_area_perimeter,
    src,
)


def cap_mask(w, h, center_xy, radius_rad):
    """Pixels within geodesic distance ``radius_rad`` of a center pixel."""
    c = pixel_to_sphere(center_xy[0], center_xy[1], w, h)
    pts = sphere_map(w, h)
    return geodesic_angle(pts, c) <= radius_rad


def voronoi_labels(w, h, k):
    sphere = sphere_map(w, h).reshape(-1, 3)
    centers = hammersley_sphere(k)
    return np.argmax(sphere @ centers.T, axis=1).reshape(h, w)


def add_boundary_noise(labels, frac, seed=0):
    rng = np.random.default_rng(seed)
    out = labels.copy()
    b = boundary_map(out)
    ys, xs = np.nonzero(b)
    pick = rng.choice(len(ys), size=int(frac * len(ys)), replace=False)
    h, w = labels.shape
    for y, x in zip(ys[pick], xs[pick]):
        dx, dy = ((1, 0), (-1, 0), (0, 1), (0, -1))[int(rng.integers(0, 4))]
        ny = min(max(y + dy, 0), h - 1)
        out[y, x] = labels[ny, (x + dx) % w]
    return out


class TestAsa:
    def test_identical_is_one(self):
        labels = voronoi_labels(32, 16, 5)
        assert asa(labels, labels) == 1.0

    def test_single_superpixel_two_halves(self):
        labels = np.zeros((8, 16), dtype=int)
        gt = np.zeros((8, 16), dtype=int)
        gt[:, 8:] = 1
        assert asa(labels, gt) == 0.5

    def test_refinement_is_one(self):
        gt = np.zeros((8, 16), dtype=int)
        gt[:, 8:] = 1
        labels = np.arange(8 * 16).reshape(8, 16)
        assert asa(labels, gt) == 1.0

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            asa(np.zeros((4, 8)), np.zeros((4, 6)))

    def test_relabeling_invariance(self):
        rng = np.random.default_rng(1)
        labels = rng.integers(0, 7, size=(16, 32))
        gt = rng.integers(0, 3, size=(16, 32))
        perm = rng.permutation(7)
        assert asa(perm[labels], gt) == asa(labels, gt)


class TestBoundaryMap:
    def test_single_label_empty(self):
        assert not boundary_map(np.zeros((4, 8), dtype=int)).any()

    def test_seam_split_marks_both_columns(self):
        labels = np.zeros((4, 8), dtype=int)
        labels[:, 4:] = 1
        b = boundary_map(labels)
        assert b[:, 0].all() and b[:, 7].all()
        assert b[:, 3].all() and b[:, 4].all()
        assert not b[:, 1].any() and not b[:, 5].any()

    def test_checkerboard_all_marked(self):
        labels = np.indices((4, 8)).sum(axis=0) % 2
        assert boundary_map(labels).all()


class TestBoundaryRecall:
    def test_identical_is_one(self):
        labels = voronoi_labels(32, 16, 4)
        assert boundary_recall(labels, labels) == 1.0

    def test_empty_superpixel_boundary_is_zero(self):
        gt = np.zeros((8, 16), dtype=int)
        gt[:, 8:] = 1
        assert boundary_recall(np.zeros((8, 16), dtype=int), gt) == 0.0

    def test_one_pixel_offset_within_eps(self):
        gt = np.zeros((16, 32), dtype=int)
        gt[:, 16:] = 1
        labels = np.zeros((16, 32), dtype=int)
        labels[:, 17:] = 1
        assert boundary_recall(labels, gt, eps=2.0) == 1.0

    def test_monotone_in_eps(self):
        rng = np.random.default_rng(2)
        labels = voronoi_labels(64, 32, 6)
        gt = rng.integers(0, 3, size=(32, 64))
        values = [boundary_recall(labels, gt, eps=e) for e in (1.0, 2.0, 4.0, 8.0)]
        assert all(a <= b + 1e-12 for a, b in zip(values, values[1:]))

    def test_horizontal_rotation_invariance(self):
        rng = np.random.default_rng(3)
        labels = voronoi_labels(64, 32, 8)
        gt = rng.integers(0, 4, size=(32, 64))
        r_labels = np.roll(labels, 17, axis=1)
        r_gt = np.roll(gt, 17, axis=1)
        assert boundary_recall(r_labels, r_gt) == boundary_recall(labels, gt)
        assert asa(r_labels, r_gt) == asa(labels, gt)


class TestContourDensity:
    def test_single_label(self):
        assert contour_density(np.zeros((4, 8), dtype=int)) == 0.0

    def test_checkerboard(self):
        labels = np.indices((4, 8)).sum(axis=0) % 2
        assert contour_density(labels) == 1.0

    def test_two_label_vertical_split_4x8(self):
        labels = np.zeros((4, 8), dtype=int)
        labels[:, 4:] = 1
        # columns {0, 3, 4, 7} are boundary (seam wraps): 16 of 32 pixels
        assert contour_density(labels) == 16 / 32


class TestPrCurve:
    def test_single_scale_zero_threshold_matches_recall(self):
        rng = np.random.default_rng(4)
        labels = voronoi_labels(64, 32, 6)
        gt = rng.integers(0, 3, size=(32, 64))
        samples = pr_curve([labels], gt, thresholds=[0.0])
        assert samples[0][2] == boundary_recall(labels, gt)

    def test_threshold_above_max_is_empty_detection(self):
        labels = voronoi_labels(32, 16, 4)
        gt = voronoi_labels(32, 16, 3)
        (t, pr, br), = pr_curve([labels], gt, thresholds=[1.01])
        assert (pr, br) == (1.0, 0.0)

    def test_duplicate_scales_equal_single(self):
        rng = np.random.default_rng(5)
        labels = voronoi_labels(32, 16, 5)
        gt = rng.integers(0, 3, size=(16, 32))
        a = pr_curve([labels], gt)
        b = pr_curve([labels, labels], gt)
        assert a == b


class TestMaxF:
    def test_equal_pr_br(self):
        assert max_f([(0.5, 0.7, 0.7)]) == pytest.approx(0.7)

    def test_all_zero(self):
        assert max_f([(0.5, 0.0, 0.0)]) == 0.0

    def test_picks_best_harmonic_mean(self):
        samples = [(0.1, 0.8, 0.4), (0.2, 0.6, 0.6)]
        assert max_f(samples) == pytest.approx(0.6)


class TestSphericalMeasure:
    def test_whole_sphere_area(self):
        w, h = 512, 256
        area, perim = spherical_area_perimeter(np.ones((h, w), dtype=bool), w, h)
        assert abs(area - 4 * np.pi) / (4 * np.pi) < 0.01
        assert perim == 0.0

    def test_single_row_area_tracks_latitude(self):
        w, h = 64, 32
        for y in (4, 16, 28):
            mask = np.zeros((h, w), dtype=bool)
            mask[y] = True
            area, _ = spherical_area_perimeter(mask, w, h)
            expected = np.sin(y * np.pi / h) * (np.pi / h) * (2 * np.pi / w) * w
            assert area == pytest.approx(expected)

    def test_equator_band_perimeter(self):
        w, h = 512, 256
        mask = np.zeros((h, w), dtype=bool)
        mask[h // 2 - 16 : h // 2 + 16] = True
        _, perim = spherical_area_perimeter(mask, w, h)
        # two circles of latitude near the equator
        assert perim == pytest.approx(2 * 2 * np.pi, rel=0.02)


class TestCom:
    def test_polar_cap_near_one(self):
        w, h = 1024, 512
        # cap boundary at 79 degrees latitude, well away from rows 0 and h-1
        split = int(h * 79 / 180)
        cap = np.arange(h)[:, None] < split * np.ones((1, w), dtype=int)
        area, perim = spherical_area_perimeter(cap, w, h)
        q = (4 * np.pi * area - area**2) / perim**2
        assert cap.sum() >= 1000
        assert 0.9 <= q <= 1.0
        value = com(cap.astype(int))
        assert 0.9 <= value <= 1.0

    def test_hemisphere_near_one(self):
        w, h = 512, 256
        labels = (np.arange(h)[:, None] >= h // 2 * np.ones((1, w))).astype(int)
        assert com(labels) > 0.99

    def test_serrated_region_low(self):
        w, h = 64, 32
        labels = np.indices((h, w)).sum(axis=0) % 2
        assert com(labels) < 0.1

    def test_bounds(self):
        rng = np.random.default_rng(6)
        labels = rng.integers(0, 5, size=(32, 64))
        assert 0.0 <= com(labels) <= 1.0


class TestProjectShape:
    def test_equator_cap_is_solid_disk(self):
        w, h = 256, 128
        mask = cap_mask(w, h, (64, 64), 0.099)
        ys, xs = np.nonzero(mask)
        assert 450 <= len(ys) <= 550
        shape = project_shape(ys, xs, w, h)
        hull_cells = shape.mask.sum()
        from spherepix.metrics import _convex_hull_mask

        solidity = shape.mask.sum() / _convex_hull_mask(shape.mask).sum()
        assert solidity >= 0.9

    def test_collinear_fallback(self):
        w, h = 256, 128
        ys = np.array([30, 31, 32])
        xs = np.array([7, 7, 7])
        shape = project_shape(ys, xs, w, h)
        assert shape.mask.sum() == 3
        assert min(shape.mask.shape) == 1

    def test_rotation_invariant_summaries(self):
        w, h = 256, 128
        # anisotropic blob: ellipse-ish cap stretched in x
        base = cap_mask(w, h, (100, 70), 0.12)
        base |= cap_mask(w, h, (110, 70), 0.12)
        ys, xs = np.nonzero(base)
        s1 = project_shape(ys, xs, w, h)
        shift = 97
        s2 = project_shape(ys, (xs + shift) % w, w, h)
        assert abs(src(s1) - src(s2)) < 0.02
        assert abs(int(s1.mask.sum()) - int(s2.mask.sum())) <= 0.02 * s1.mask.sum()

    def test_empty_raises(self):
        with pytest.raises(ValueError):
            project_shape(np.array([]), np.array([]), 64, 32)


class TestSrc:
    def test_filled_square_is_one(self):
        mask = np.ones((20, 20), dtype=bool)
        assert src(mask) >= 0.95

    def test_line_scores_near_zero(self):
        mask = np.zeros((1, 30), dtype=bool)
        mask[0, :] = True
        assert src(mask) < 0.05

    def test_bounds_on_random_masks(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            mask = rng.random((12, 12)) > 0.5
            if not mask.any():
                continue
            value = src(mask)
            assert 0.0 <= value <= 1.0

    def test_serrated_below_solid(self):
        solid = np.ones((12, 12), dtype=bool)
        serrated = solid.copy()
        serrated[::2, 0] = False
        serrated[1::2, -1] = False
        assert src(serrated) < src(solid)


class TestSmf:
    def test_identical_masks_score_one(self):
        mask = np.zeros((5, 5), dtype=bool)
        mask[1:4, 1:4] = True
        values = smf([mask, mask.copy(), mask.copy()])
        assert np.allclose(values, 1.0)

    def test_disjoint_pair_scores_half(self):
        a = np.zeros((3, 3), dtype=bool)
        a[1, 0] = a[1, 2] = True
        b = np.zeros((3, 3), dtype=bool)
        b[0, 1] = b[2, 1] = True
        values = smf([a, b])
        assert np.allclose(values, 0.5)

    def test_bounds(self):
        rng = np.random.default_rng(8)
        masks = [rng.random((6, 6)) > 0.4 for _ in range(5)]
        masks = [m if m.any() else np.ones((2, 2), bool) for m in masks]
        values = smf(masks)
        assert ((values >= 0.0) & (values <= 1.0)).all()

    def test_congruent_masks_of_different_resolution(self):
        small = np.zeros((6, 6), dtype=bool)
        small[1:5, 1:5] = True
        big = np.zeros((12, 12), dtype=bool)
        big[2:10, 2:10] = True
        values = smf([small, big])
        assert (values > 0.9).all()


class TestGgr:
    def test_icosahedral_tessellation_high(self):
        # 12 congruent near-disk cells
        w, h = 512, 256
        phi = (1 + 5**0.5) / 2
        verts = []
        for a in (-1, 1):
            for b in (-phi, phi):
                verts += [(0, a, b), (a, b, 0), (b, 0, a)]
        verts = np.array(verts, dtype=float)
        verts /= np.linalg.norm(verts, axis=1, keepdims=True)
        sphere = sphere_map(w, h).reshape(-1, 3)
        labels = np.argmax(sphere @ verts.T, axis=1).reshape(h, w)
        assert ggr(labels) >= 0.8

    def test_noise_strictly_lowers_score(self):
        labels = voronoi_labels(128, 64, 30)
        clean = ggr(labels)
        noisy = ggr(add_boundary_noise(labels, 0.3))
        assert 0.0 <= noisy < clean <= 1.0

    def test_relabeling_invariance(self):
        labels = voronoi_labels(64, 32, 8)
        perm = np.random.default_rng(9).permutation(8)
        assert ggr(perm[labels]) == pytest.approx(ggr(labels))


class TestPlanarGr:
    def test_runs_and_bounded(self):
        labels = voronoi_labels(64, 32, 10)
        value = gr(labels)
        assert 0.0 <= value <= 1.0

    def test_seam_straddling_region(self):
        labels = np.ones((8, 16), dtype=int)
        labels[:, :2] = 0
        labels[:, 14:] = 0
        value = gr(labels)
        assert 0.0 <= value <= 1.0


class TestEvaluate:
    def test_report_fields_bounded(self):
        rng = np.random.default_rng(10)
        labels = voronoi_labels(64, 32, 12)
        gt = rng.integers(0, 4, size=(32, 64))
        report = evaluate(labels, gt)
        for name in ("asa", "br", "cd", "com", "ggr"):
            value = getattr(report, name)
            assert 0.0 <= value <= 1.0, name

    def test_perfect_match(self):
        labels = voronoi_labels(32, 16, 4)
        report = evaluate(labels, labels)
        assert report.asa == 1.0 and report.br == 1.0
