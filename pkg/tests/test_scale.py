from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gpfractal.scale import (
    CustomScale,
    ExpLogScale,
    LogCorrectedScale,
    LogScale,
    PowerLogScale,
    PowerScale,
    ScaleDomainError,
    lower_index_report,
    parse_scale_spec,
    phi_kernel,
)


class TestEval:
    def test_power_sqrt(self):
        f = PowerScale(0.5)
        assert f.gamma(0.25) == pytest.approx(0.5)

    def test_gamma_at_zero(self):
        for f in (PowerScale(0.3), LogScale(1.0), ExpLogScale(0.5)):
            assert f.gamma(0.0) == 0.0

    def test_logscale_value(self):
        f = LogScale(1.0)
        assert f.gamma(math.exp(-2.0)) == pytest.approx(0.5)

    def test_vanishing_at_origin(self, registry):
        # gamma(0+) = 0 for every family, but the slow scales approach it
        # slower than any power, so each family gets a witness point its
        # own decay rate can actually reach within float64
        for f in registry:
            if isinstance(f, (PowerScale, PowerLogScale)):
                witness, bound = 1e-12, 1e-2
            elif isinstance(f, ExpLogScale):
                witness, bound = 1e-300, 1e-3
            else:
                witness, bound = 1e-300, 2e-3
            assert f.gamma(witness) < bound, f.name
            assert f.gamma(witness) < f.gamma(1e-9) < f.gamma(1e-3), f.name

    def test_domain_errors(self):
        f = LogScale(1.0)
        with pytest.raises(ScaleDomainError):
            f.gamma(0.9)
        with pytest.raises(ScaleDomainError):
            f.gamma(-0.1)


class TestInverse:
    def test_power(self):
        assert PowerScale(0.5).inverse(0.5) == pytest.approx(0.25)

    def test_logscale(self):
        assert LogScale(1.0).inverse(0.5) == pytest.approx(math.exp(-2.0))

    def test_explog_hand_computed(self):
        # gamma(x) = exp(-log^0.5(1/x)) = e^-2 at log(1/x) = 4
        f = ExpLogScale(0.5)
        assert f.inverse(math.exp(-2.0)) == pytest.approx(math.exp(-4.0))
        assert f.gamma(math.exp(-4.0)) == pytest.approx(math.exp(-2.0))

    def test_above_range_rejected(self):
        with pytest.raises(ScaleDomainError):
            PowerScale(0.5).inverse(1.5)

    @settings(max_examples=60, deadline=None)
    @given(st.floats(min_value=1e-9, max_value=1.0))
    def test_round_trip_power(self, v):
        f = PowerScale(0.4)
        assert abs(f.gamma(f.inverse(v, tol=1e-13)) - v) <= 1e-9

    def test_round_trip_all_families(self, registry, rng):
        # draw v = gamma(r_true) so the pre-image is representable; the
        # slow scales map values below gamma(1e-300) to underflow
        for f in registry:
            vmax = f.gamma(f.x_max)
            r_true = f.x_max * np.exp(rng.uniform(np.log(1e-10), 0.0, size=200))
            for v in f.gamma(r_true):
                r = f.inverse(v, tol=1e-12)
                assert abs(f.gamma(r) - v) <= 1e-9 * max(1.0, vmax), f.name


class TestPsi:
    def test_power_constant(self):
        f = PowerScale(0.3)
        for r in np.geomspace(1e-10, 1.0, 25):
            assert abs(f.psi(r) - 0.3) <= 1e-12

    def test_logscale_hand_value(self):
        assert LogScale(1.0).psi(math.exp(-2.0)) == pytest.approx(0.5)

    def test_explog_hand_value(self):
        # psi(r) = alpha log^{alpha-1}(1/r) = 0.5 * 4^{-0.5} at r = e^-4
        assert ExpLogScale(0.5).psi(math.exp(-4.0)) == pytest.approx(0.25)

    def test_matches_finite_difference(self, registry):
        for f in registry:
            r = f.x_max / 7.0
            h = r * 1e-7
            fd = (f.gamma(r + h) - f.gamma(r - h)) / (2 * h)
            assert f.dgamma(r) == pytest.approx(fd, rel=1e-5), f.name


class TestMonotonicityAndConcavity:
    @settings(max_examples=100, deadline=None)
    @given(
        st.floats(min_value=1e-12, max_value=0.5),
        st.floats(min_value=1.0 + 1e-6, max_value=2.0),
    )
    def test_increasing_pairs(self, r1, factor):
        # strictness needs meaningfully separated arguments: adjacent
        # floats can collide in the rounded output of any increasing map
        for f in (PowerScale(0.5), LogScale(1.0), ExpLogScale(0.3)):
            r2 = min(r1 * factor, f.x_max)
            if r2 >= r1 * (1.0 + 1e-7):
                assert f.gamma(r1) < f.gamma(r2)

    def test_increasing_dense(self, registry, rng):
        for f in registry:
            r = np.sort(rng.uniform(1e-12, f.x_max, size=1000))
            g = f.gamma(r)
            assert np.all(np.diff(g) > 0), f.name

    def test_second_differences_nonpositive(self, concave_registry):
        for f in concave_registry:
            hi = f.x_conc
            r = np.linspace(hi / 300.0, hi, 200)
            g = f.gamma(r)
            d2 = np.diff(g, 2)
            assert np.all(d2 <= 1e-12), f.name

    def test_subadditivity(self, concave_registry, rng):
        for f in concave_registry:
            s = rng.uniform(0, f.x_conc / 2, size=1000)
            t = rng.uniform(0, f.x_conc / 2, size=1000)
            lhs = f.gamma(s + t)
            rhs = f.gamma(s) + f.gamma(t)
            assert np.all(lhs <= rhs + 1e-12), f.name


class TestPhiKernel:
    def test_positive_beta(self):
        assert phi_kernel(2.0, 0.5) == pytest.approx(4.0)

    def test_negative_beta(self):
        assert phi_kernel(-1.0, 0.01) == 1.0

    def test_zero_beta(self):
        assert phi_kernel(0.0, 1.0) == pytest.approx(1.0)
        assert phi_kernel(0.0, 2.0) == pytest.approx(1.0)  # r ^ 1 = 1

    def test_rejects_zero(self):
        with pytest.raises(ValueError):
            phi_kernel(1.0, 0.0)

    def test_monotone(self, rng):
        r = np.sort(rng.uniform(1e-6, 10.0, size=100))
        v = phi_kernel(1.3, r)
        assert np.all(np.diff(v) < 0)


class TestLowerIndexReport:
    def test_power(self):
        rep = lower_index_report(PowerScale(0.3), np.geomspace(1e-2, 1e-8, 20))
        assert rep.ind_lower == pytest.approx(0.3, abs=1e-12)
        assert rep.ind_upper == pytest.approx(0.3, abs=1e-12)

    def test_bracket_ordering(self, registry):
        for f in registry:
            rep = lower_index_report(f, np.geomspace(1e-2, 1e-9, 25))
            assert rep.liminf_est <= rep.limsup_est
            assert rep.ind_lower <= rep.ind_upper

    def test_logscale_psi_sqrtlog_goes_to_zero(self):
        grid = np.geomspace(1e-2, 1e-200, 30)
        rep = lower_index_report(LogScale(1.0), grid)
        assert rep.liminf_est == pytest.approx(0.0, abs=1e-2)
        first = LogScale(1.0).psi(1e-2) * math.sqrt(math.log(1e2))
        assert rep.psi_sqrtlog_limit_est < first / 5.0

    def test_explog_dichotomy(self):
        grid = np.geomspace(1e-2, 1e-250, 40)
        small = lower_index_report(ExpLogScale(0.3), grid)
        large = lower_index_report(ExpLogScale(0.7), grid)
        head_small = ExpLogScale(0.3).psi(1e-2) * math.sqrt(math.log(1e2))
        head_large = ExpLogScale(0.7).psi(1e-2) * math.sqrt(math.log(1e2))
        assert small.psi_sqrtlog_limit_est < head_small
        assert large.psi_sqrtlog_limit_est > head_large

    def test_needs_four_decades(self):
        with pytest.raises(ValueError):
            lower_index_report(PowerScale(0.5), np.geomspace(1e-2, 1e-3, 6))


class TestSpecStrings:
    @pytest.mark.parametrize(
        "spec, cls",
        [
            ("power:H=0.5", PowerScale),
            ("powerlog:H=0.3,beta=-1.0", PowerLogScale),
            ("logscale:beta=1.0", LogScale),
            ("explog:alpha=0.3", ExpLogScale),
            ("logcorrected:beta=1.0,alpha=0.5", LogCorrectedScale),
        ],
    )
    def test_parse(self, spec, cls):
        f = parse_scale_spec(spec)
        assert isinstance(f, cls)
        assert parse_scale_spec(f.spec_string()).spec_string() == f.spec_string()

    def test_rejects_unknown(self):
        with pytest.raises(ValueError):
            parse_scale_spec("weibull:k=2")

    def test_rejects_leftover_params(self):
        with pytest.raises(ValueError):
            parse_scale_spec("power:H=0.5,junk=1")

    def test_custom_csv(self, tmp_path):
        knots = np.geomspace(1e-6, 1.0, 40)
        path = tmp_path / "knots.csv"
        path.write_text("\n".join(f"{r},{r**0.4}" for r in knots))
        f = parse_scale_spec(f"custom:path={path}")
        assert isinstance(f, CustomScale)
        # log-log linear interpolation is exact for pure powers
        assert f.gamma(3e-3) == pytest.approx((3e-3) ** 0.4, rel=1e-9)
        assert f.inverse(0.25) == pytest.approx(0.25 ** (1 / 0.4), rel=1e-9)
        assert f.psi(1e-3) == pytest.approx(0.4, rel=1e-3)


class TestCustomGuards:
    def test_needs_knots_near_r_for_psi(self):
        f = CustomScale([(1e-8, 1e-4), (1e-4, 1e-2), (1.0, 1.0)])
        with pytest.raises(ScaleDomainError):
            f.psi(1e-6)

    def test_rejects_nonmonotone(self):
        with pytest.raises(ValueError):
            CustomScale([(0.1, 0.5), (0.2, 0.4)])
