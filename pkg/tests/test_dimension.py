from __future__ import annotations

import math

import numpy as np
import pytest

from gpfractal.dimension import (
    box_dimension_euclidean,
    default_dyadic_scales,
    dim_delta_estimate,
    dim_rho_product,
    image_dimension_experiment,
)
from gpfractal.fractal_sets import build_cantor
from gpfractal.scale import LogScale, PowerScale


class TestBoxDimension:
    def test_line_segment(self, rng):
        t = rng.uniform(0, 1, size=4000)
        pts = np.column_stack([t, 0.3 * t + 0.1])
        est = box_dimension_euclidean(pts, default_dyadic_scales(1, 8))
        assert est.value == pytest.approx(1.0, abs=0.1)

    def test_single_point(self):
        est = box_dimension_euclidean(np.array([[0.3, 0.4]]), default_dyadic_scales(1, 6))
        assert est.value == 0.0

    def test_degenerate_cloud(self):
        pts = np.tile([0.2, 0.7], (500, 1))
        est = box_dimension_euclidean(pts, default_dyadic_scales(1, 6))
        assert est.value == 0.0

    def test_filled_square(self, rng):
        pts = rng.uniform(0, 1, size=(200_000, 2))
        est = box_dimension_euclidean(pts, default_dyadic_scales(1, 6))
        assert est.value == pytest.approx(2.0, abs=0.1)

    def test_counts_monotone_in_scale(self, rng):
        pts = rng.uniform(0, 1, size=(5000, 2))
        est = box_dimension_euclidean(pts, default_dyadic_scales(0, 8))
        counts = [c for _, c in est.counts]
        assert all(a >= b for a, b in zip(counts, counts[1:]))

    def test_needs_four_scales(self):
        with pytest.raises(ValueError):
            box_dimension_euclidean(np.zeros((10, 2)), [0.5, 0.25, 0.125])

    def test_subset_monotonicity(self, rng):
        pts = rng.uniform(0, 1, size=(4000, 2))
        sub = pts[:400]
        scales = default_dyadic_scales(1, 7)
        e_small = box_dimension_euclidean(sub, scales)
        e_big = box_dimension_euclidean(pts, scales)
        assert e_small.value <= e_big.value + 2 * (e_small.stderr + e_big.stderr) + 1e-9


class TestDimDelta:
    def test_interval_inverse_holder(self):
        for h in (0.4, 0.5, 0.8):
            est = dim_delta_estimate([(0.2, 1.0)], PowerScale(h), n_range=range(2, 14))
            assert est.value == pytest.approx(1.0 / h, abs=0.05), h

    def test_cantor_by_construction(self):
        f = PowerScale(0.5)
        for zeta in (0.5, 1.0):
            cs = build_cantor(f, zeta, depth=12)
            est = dim_delta_estimate(cs, f)
            assert est.value == pytest.approx(zeta, abs=0.05)

    def test_logscale_divergence_flag(self):
        est = dim_delta_estimate([(0.01, 0.5)], LogScale(1.0), n_range=range(1, 9))
        assert est.diverged
        assert est.value == math.inf

    def test_window_stability(self):
        # halving the fit window moves the estimate by <= 2 stderr-ish
        f = PowerScale(0.5)
        full = dim_delta_estimate([(0.2, 1.0)], f, n_range=range(2, 14))
        half = dim_delta_estimate([(0.2, 1.0)], f, n_range=range(2, 8))
        assert abs(full.value - half.value) <= 2 * (full.stderr + half.stderr) + 0.02


class TestDimRhoProduct:
    def test_interval_times_box_sandwich(self):
        # dim_delta(E) + dim(F) <= rho-estimate <= same here (equality for
        # an interval and a solid box)
        f = PowerScale(0.5)
        F = [{"type": "box", "lo": [0.0], "hi": [0.2]}]
        est = dim_rho_product([(0.2, 1.0)], F, f, levels=range(4, 11))
        assert est.value == pytest.approx(1.0 / 0.5 + 1.0, abs=0.15)

    def test_ball_member(self):
        f = PowerScale(0.5)
        F = [{"type": "ball", "center": [0.0, 0.0, 0.0], "radius": 0.1}]
        est = dim_rho_product([(0.9, 1.0)], F, f)
        assert est.value == pytest.approx(2.0 + 3.0, abs=0.6)


class TestIntersectionExperiment:
    def test_image_dim_saturates_at_target_dim(self):
        # dim_delta(E) = 2 > d = 1 and F a solid interval: the image
        # intersection fills F, so its dimension tracks dim(F) = 1
        from gpfractal.dimension import intersection_dimension_experiment
        from gpfractal.hitting import grid_tolerance_guard

        f = PowerScale(0.5)
        grid_n = 2048
        tol = grid_tolerance_guard(f, 0.8 / (grid_n - 1), grid_n, 1)
        rep = intersection_dimension_experiment(
            f, (0.2, 1.0), [{"type": "box", "lo": [0.0], "hi": [0.2]}],
            d=1, n_paths=20, tol=tol, seed=31, grid_n=grid_n,
        )
        assert rep.max_image_dim == pytest.approx(1.0, abs=0.2)
        assert rep.hit_paths > 0

    def test_no_hits_flagged(self):
        from gpfractal.dimension import intersection_dimension_experiment

        f = PowerScale(0.5)
        rep = intersection_dimension_experiment(
            f, (0.2, 1.0), [{"type": "ball", "center": [500.0], "radius": 0.1}],
            d=1, n_paths=5, tol=0.5, seed=31, grid_n=512,
        )
        assert rep.flagged_empty
        assert math.isnan(rep.max_time_dim)


class TestImageExperiment:
    def test_brownian_interval_saturates_at_one(self):
        rep = image_dimension_experiment(
            PowerScale(0.5), (0.2, 1.0), d=1, n_paths=6, grid_n=1024, seed=3
        )
        assert 0.8 <= rep.mean <= 1.0
        assert rep.theory == pytest.approx(1.0)

    def test_reports_theory_min(self):
        rep = image_dimension_experiment(
            PowerScale(0.75), (0.2, 1.0), d=2, n_paths=4, grid_n=512, seed=3
        )
        assert rep.theory == pytest.approx(min(2.0, 1 / 0.75), abs=0.1)

    def test_thread_count_does_not_change_results(self):
        kw = dict(d=1, n_paths=4, grid_n=256, seed=9)
        a = image_dimension_experiment(PowerScale(0.5), (0.2, 1.0), threads=1, **kw)
        b = image_dimension_experiment(PowerScale(0.5), (0.2, 1.0), threads=4, **kw)
        assert a.per_path == b.per_path
