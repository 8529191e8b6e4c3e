from __future__ import annotations

import math

import numpy as np
import pytest

from gpfractal.fractal_sets import (
    DiscreteMeasure,
    RatioOverflowError,
    build_cantor,
    cantor_measure,
    covering_number_delta,
    gamma_dyadic_count,
    gamma_dyadic_cover,
    packing_number_delta,
)
from gpfractal.metrics import StationaryGamma
from gpfractal.scale import PowerScale


class TestBuildCantor:
    def test_middle_thirds(self):
        # gamma(r) = r and zeta = log2/log3 give t_k = 3^-k
        zeta = math.log(2) / math.log(3)
        cs = build_cantor(PowerScale(1.0), zeta, depth=6, eps0=1.0)
        assert np.allclose(cs.t_seq, 3.0 ** -np.arange(7), rtol=1e-12)
        lengths = np.diff(cs.intervals(6), axis=1)
        assert np.allclose(lengths, 3.0**-6, rtol=1e-10)

    def test_depth_zero(self):
        cs = build_cantor(PowerScale(0.5), 1.0, depth=0, eps0=0.7)
        assert cs.intervals().tolist() == [[0.0, 0.7]]

    def test_quarter_scaling(self):
        # H = 1/2, zeta = 1: t_k = (2^-k)^2 = 4^-k
        cs = build_cantor(PowerScale(0.5), 1.0, depth=5, eps0=1.0)
        assert np.allclose(cs.t_seq, 4.0 ** -np.arange(6), rtol=1e-12)
        assert cs.intervals(5).shape == (32, 2)

    def test_ratio_overflow(self):
        # zeta large makes t_k shrink slower than 2^-k: children overflow
        with pytest.raises(RatioOverflowError):
            build_cantor(PowerScale(0.5), 3.0, depth=4, eps0=1.0)

    def test_nesting_and_disjointness(self):
        cs = build_cantor(PowerScale(0.5), 0.8, depth=8, eps0=1.0)
        for k in range(1, 9):
            kids = cs.intervals(k)
            parents = cs.intervals(k - 1)
            # each child inside exactly one parent
            for lo, hi in kids:
                inside = np.sum((parents[:, 0] <= lo + 1e-15) & (hi <= parents[:, 1] + 1e-15))
                assert inside == 1
            order = np.argsort(kids[:, 0])
            sorted_kids = kids[order]
            assert np.all(sorted_kids[1:, 0] > sorted_kids[:-1, 1] - 1e-15)

    def test_level_count(self):
        cs = build_cantor(PowerScale(0.5), 0.7, depth=7)
        for k in range(8):
            assert cs.intervals(k).shape == (2**k, 2)


class TestCantorMeasure:
    def test_atom_layout(self):
        cs = build_cantor(PowerScale(0.5), 1.0, depth=3)
        nu = cantor_measure(cs)
        assert nu.n == 8
        assert np.allclose(nu.weights, 1 / 8)

    def test_ancestor_mass(self):
        cs = build_cantor(PowerScale(0.5), 1.0, depth=6)
        nu = cantor_measure(cs)
        for lo, hi in cs.intervals(1):
            mass = nu.weights[(nu.atoms >= lo) & (nu.atoms <= hi)].sum()
            assert mass == pytest.approx(0.5)

    def test_ball_bound(self, rng):
        # nu(B_{delta*}(t, r)) <= 8 r^zeta on the construction's range
        f = PowerScale(0.5)
        for zeta in (0.5, 1.0):
            cs = build_cantor(f, zeta, depth=12)
            nu = cantor_measure(cs)
            model = StationaryGamma(f)
            K = cs.depth
            r_lo, r_hi = 2.0 ** (-(K - 1) / zeta), f.gamma(cs.eps0)
            for _ in range(1000):
                t = rng.choice(nu.atoms)
                r = math.exp(rng.uniform(math.log(r_lo), math.log(r_hi)))
                assert nu.ball_mass_time(model, t, r) <= 8.0 * r**zeta + 1e-12

    def test_upper_content_certificate(self):
        # the level-k cover certifies sum (2 * 2^{-k/zeta})^zeta = 2^zeta
        for zeta in (0.5, 1.0):
            cs = build_cantor(PowerScale(0.5), zeta, depth=10)
            for k in range(1, 11):
                cost = 2**k * (2.0 * 2.0 ** (-k / zeta)) ** zeta
                assert cost == pytest.approx(2.0**zeta)

    def test_weights_validated(self):
        with pytest.raises(ValueError):
            DiscreteMeasure(np.array([0.1, 0.2]), np.array([0.6, 0.6]))
        with pytest.raises(ValueError):
            DiscreteMeasure(np.array([0.1, 0.2]), np.array([1.2, -0.2]))


class TestGammaDyadic:
    def test_single_tile_interval(self):
        f = PowerScale(1.0)
        w = f.inverse(2.0**-3)
        cover = gamma_dyadic_cover([(0.0, w)], 3, f)
        assert cover.shape[0] == 1

    def test_unit_interval_dyadic(self):
        f = PowerScale(1.0)
        cover = gamma_dyadic_cover([(0.0, 1.0)], 3, f)
        assert cover.shape[0] == 8
        assert gamma_dyadic_count([(0.0, 1.0)], 3, f) == 8

    def test_count_matches_cover(self):
        f = PowerScale(0.5)
        cs = build_cantor(f, 0.8, depth=8)
        for n in (2, 4, 6):
            cover = gamma_dyadic_cover(cs, n, f)
            assert cover.shape[0] == gamma_dyadic_count(cs, n, f)

    def test_cantor_slope(self):
        # tiles meeting C_zeta at level n number ~ 2^(n zeta)
        f = PowerScale(0.5)
        zeta = 0.6
        cs = build_cantor(f, zeta, depth=12)
        ns = np.arange(3, 18)
        counts = np.array([gamma_dyadic_count(cs, int(n), f) for n in ns])
        slope = np.polyfit(ns, np.log2(counts), 1)[0]
        assert slope == pytest.approx(zeta, abs=0.05)

    def test_materialization_guard(self):
        from gpfractal.scale import LogScale

        f = LogScale(1.0)
        with pytest.raises(ValueError):
            gamma_dyadic_cover([(0.01, 0.5)], 7, f, max_tiles=10_000)


class TestCoveringPacking:
    def test_singleton(self):
        model = StationaryGamma(PowerScale(0.5))
        assert covering_number_delta([0.3], 0.1, model) == 1
        assert packing_number_delta([0.3], 0.1, model) == 1

    def test_uniform_grid_interval_arithmetic(self):
        # m points on [0, 1], euclidean scale, r = 1/(2k): about k balls
        f = PowerScale(1.0)
        model = StationaryGamma(f)
        pts = np.linspace(0.0, 1.0, 501)
        for k in (4, 8, 16):
            n = covering_number_delta(pts, 1.0 / (2 * k), model)
            assert abs(n - k) <= 1

    def test_covering_packing_relation(self, rng):
        # N(E, 2r) <= P(E, r) for any metric with the triangle inequality
        model = StationaryGamma(PowerScale(0.5))
        for _ in range(200):
            pts = rng.uniform(0.0, 1.0, size=rng.integers(5, 60))
            r = rng.uniform(0.01, 0.4)
            assert covering_number_delta(pts, 2 * r, model) <= packing_number_delta(
                pts, r, model
            )


class TestFrostmanConsistency:
    def test_exponent_fit_near_zeta(self):
        from gpfractal.energy import frostman_exponent

        f = PowerScale(0.5)
        for zeta in (0.5, 0.8):
            cs = build_cantor(f, zeta, depth=12)
            nu = cantor_measure(cs)
            fit = frostman_exponent(nu, f)
            assert fit == pytest.approx(zeta, abs=0.1)
