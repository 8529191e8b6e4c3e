"""Canonical metrics of the process and the commensurability diagnostic.

Two interchangeable backends: the stationary-increment model
delta*(s, t) = gamma(|t - s|), used for set geometry, and the
covariance-derived delta(s, t) = sqrt(R(t,t) + R(s,s) - 2 R(s,t)) of a
simulated process.  The product metric on time x space is
rho(u, v) = max(delta, Euclidean).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "MetricModel",
    "StationaryGamma",
    "FromCovariance",
    "CommensurabilityReport",
    "commensurability_report",
]

# round-off tolerance for delta^2 < 0 coming out of covariance algebra
_NEG_VAR_TOL = 1e-10


class MetricModel:
    """Base class: a metric on the time domain."""

    def delta(self, s, t):
        raise NotImplementedError

    def delta_matrix(self, times):
        times = np.asarray(times, dtype=float)
        n = times.size
        out = np.empty((n, n))
        for i in range(n):
            out[i] = self.delta(times[i], times)
        return out

    def rho(self, sx, ty):
        """Product metric max{delta(s,t), ||x - y||} on time x space points.

        Each argument is (s, x) with x an R^d vector; d must agree.
        """
        s, x = sx
        t, y = ty
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if x.shape != y.shape:
            raise ValueError("rho: spatial dimension mismatch")
        return max(float(self.delta(s, t)), float(np.linalg.norm(x - y)))


class StationaryGamma(MetricModel):
    """delta*(s, t) = gamma(|t - s|)."""

    def __init__(self, scale):
        self.scale = scale

    def delta(self, s, t):
        return self.scale.gamma(np.abs(np.asarray(t, dtype=float) - s))

    def delta_matrix(self, times):
        times = np.asarray(times, dtype=float)
        return self.scale.gamma(np.abs(times[:, None] - times[None, :]))


class FromCovariance(MetricModel):
    """delta(s, t)^2 = R(t,t) + R(s,s) - 2 R(s,t) on the covariance grid."""

    def __init__(self, cov):
        self.cov = cov

    def _index(self, t):
        grid = self.cov.grid
        i = int(np.searchsorted(grid, t))
        for j in (i - 1, i, i + 1):
            if 0 <= j < grid.size and abs(grid[j] - t) <= 1e-9 * max(1.0, abs(t)):
                return j
        raise KeyError(f"time {t} is not on the covariance grid")

    def delta(self, s, t):
        i = self._index(s)
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        j = np.array([self._index(x) for x in t_arr])
        R = self.cov.R
        d2 = R[j, j] + R[i, i] - 2.0 * R[i, j]
        d2 = _clamp_var(d2)
        out = np.sqrt(d2)
        return float(out[0]) if np.isscalar(t) or np.asarray(t).ndim == 0 else out

    def delta_matrix(self, times=None):
        R = self.cov.R
        if times is not None:
            idx = np.array([self._index(t) for t in np.asarray(times, dtype=float)])
            R = R[np.ix_(idx, idx)]
        d = np.diag(R)
        d2 = d[:, None] + d[None, :] - 2.0 * R
        return np.sqrt(_clamp_var(d2))


def _clamp_var(d2):
    d2 = np.asarray(d2, dtype=float)
    if np.any(d2 < -_NEG_VAR_TOL):
        worst = float(np.min(d2))
        raise ValueError(
            f"covariance metric produced delta^2 = {worst:.3e} < -{_NEG_VAR_TOL}"
        )
    return np.maximum(d2, 0.0)


@dataclass
class CommensurabilityReport:
    """Empirical two-sided comparison of delta against gamma(|t-s|).

    l_hat = max(ratio_max, 1/ratio_min)^2 is the smallest constant l >= 1
    with (1/sqrt(l)) gamma <= delta <= sqrt(l) gamma on the sampled pairs.
    """

    l_hat: float
    ratio_min: float
    ratio_max: float
    n_pairs: int
    grid: np.ndarray

    def to_dict(self):
        return {
            "l_hat": self.l_hat,
            "ratio_min": self.ratio_min,
            "ratio_max": self.ratio_max,
            "n_pairs": self.n_pairs,
            "grid": self.grid.tolist(),
        }


def commensurability_report(cov, scale) -> CommensurabilityReport:
    """Ratio delta(s,t) / gamma(|t-s|) over all distinct grid pairs."""
    grid = cov.grid
    dm = FromCovariance(cov).delta_matrix()
    gm = StationaryGamma(scale).delta_matrix(grid)
    iu = np.triu_indices(grid.size, k=1)
    ratios = dm[iu] / gm[iu]
    rmin = float(np.min(ratios))
    rmax = float(np.max(ratios))
    l_hat = max(rmax, 1.0 / rmin) ** 2
    return CommensurabilityReport(
        l_hat=max(l_hat, 1.0),
        ratio_min=rmin,
        ratio_max=rmax,
        n_pairs=ratios.size,
        grid=grid,
    )
