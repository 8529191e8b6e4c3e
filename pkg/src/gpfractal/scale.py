"""Variance-scale functions and their analytic attributes.

A scale function gamma is a continuous increasing function on (0, x_max]
with gamma(0+) = 0.  It drives everything else in the package: the
canonical metric of the process, the covariance builders, the adapted
dyadic coverings and the integral conditions.  Each built-in family
carries closed forms for the derivative, the inverse and the elasticity
psi(r) = r * gamma'(r) / gamma(r), because those quantities are needed at
scales where finite differences underflow.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ScaleDomainError",
    "ScaleFunction",
    "PowerScale",
    "PowerLogScale",
    "LogScale",
    "ExpLogScale",
    "LogCorrectedScale",
    "CustomScale",
    "IndexReport",
    "parse_scale_spec",
    "phi_kernel",
    "lower_index_report",
]


class ScaleDomainError(ValueError):
    """Argument outside the domain of a scale function."""


def _as_array(r):
    a = np.asarray(r, dtype=float)
    return a, (a.ndim == 0)


class ScaleFunction:
    """Base class for variance-scale functions.

    Instances are immutable after construction and safe to share across
    threads.  Subclasses implement ``_gamma``, ``_dgamma`` and, when a
    closed form exists, ``_inverse_closed``.  ``log_gamma_u``/``psi_u``
    expose the same quantities as functions of u = log(1/r), which stays
    evaluable far beyond the float64 range of r itself; families without
    closed forms may leave them unimplemented.
    """

    name = "abstract"
    #: upper end of the domain (times are dimensionless).
    x_max = 1.0
    #: whether the family is declared concave in a neighbourhood of 0.
    concave_near_zero = False
    #: right end of the declared concavity neighbourhood.
    x_conc = 0.0

    # -- core evaluations -------------------------------------------------

    def gamma(self, r):
        """Evaluate gamma(r) for 0 <= r <= x_max."""
        a, scalar = _as_array(r)
        if np.any(a < 0) or np.any(a > self.x_max * (1 + 1e-12)):
            raise ScaleDomainError(
                f"{self.name}: argument outside [0, {self.x_max}]"
            )
        out = np.zeros_like(a)
        pos = a > 0
        if np.any(pos):
            out[pos] = self._gamma(a[pos])
        return float(out) if scalar else out

    def dgamma(self, r):
        """Closed-form derivative gamma'(r), r in (0, x_max]."""
        a, scalar = _as_array(r)
        if np.any(a <= 0) or np.any(a > self.x_max * (1 + 1e-12)):
            raise ScaleDomainError(f"{self.name}: derivative needs r in (0, x_max]")
        out = self._dgamma(a)
        return float(out) if scalar else out

    def gamma2(self, r):
        g = self.gamma(r)
        return g * g

    def dgamma2(self, r):
        """(gamma^2)'(r) = 2 gamma(r) gamma'(r)."""
        return 2.0 * self.gamma(r) * self.dgamma(r)

    def psi(self, r):
        """Elasticity psi(r) = r gamma'(r) / gamma(r)."""
        a, scalar = _as_array(r)
        out = a * self.dgamma(a) / self.gamma(a)
        return float(out) if scalar else out

    def inverse(self, v, tol: float = 1e-12):
        """Solve gamma(r) = v for r, with |gamma(r) - v| <= tol.

        Uses the family closed form when available, otherwise bracketing
        bisection on the monotone gamma.
        """
        a, scalar = _as_array(v)
        vmax = self.gamma(self.x_max)
        if np.any(a < 0) or np.any(a > vmax * (1 + 1e-9)):
            raise ScaleDomainError(f"{self.name}: inverse argument above gamma(x_max)")
        out = np.empty_like(a)
        for idx, val in np.ndenumerate(a):
            if val <= 0.0:
                out[idx] = 0.0
            else:
                out[idx] = self._inverse_one(min(val, vmax), tol)
        return float(out) if scalar else out

    def _inverse_one(self, v, tol):
        closed = self._inverse_closed(v)
        if closed is not None:
            return closed
        lo, hi = 0.0, self.x_max
        glo = 0.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            gm = self.gamma(mid)
            if abs(gm - v) <= tol:
                return mid
            if gm < v:
                lo, glo = mid, gm
            else:
                hi = mid
            if hi - lo <= 1e-17 * self.x_max:
                break
        return 0.5 * (lo + hi)

    # -- hooks ------------------------------------------------------------

    def _gamma(self, a: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _dgamma(self, a: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _inverse_closed(self, v: float):
        return None

    # u-space closed forms, u = log(1/r).  Needed by the asymptotic
    # condition checkers; table-backed scales cannot provide them.

    def log_gamma_u(self, u):
        raise NotImplementedError(f"{self.name}: no closed form in u-space")

    def psi_u(self, u):
        raise NotImplementedError(f"{self.name}: no closed form in u-space")

    def spec_string(self) -> str:
        raise NotImplementedError

    def __repr__(self):
        return f"<ScaleFunction {self.spec_string()}>"


class PowerScale(ScaleFunction):
    """gamma(r) = r^H for H in (0, 1]."""

    def __init__(self, h: float, x_max: float = 1.0):
        if not 0 < h <= 1:
            raise ValueError("power scale needs H in (0, 1]")
        self.h = float(h)
        self.x_max = float(x_max)
        self.name = f"power(H={h:g})"
        self.concave_near_zero = True
        self.x_conc = self.x_max

    def _gamma(self, a):
        return a**self.h

    def _dgamma(self, a):
        return self.h * a ** (self.h - 1.0)

    def _inverse_closed(self, v):
        return v ** (1.0 / self.h)

    def psi(self, r):
        a, scalar = _as_array(r)
        out = np.full_like(a, self.h)
        return float(out) if scalar else out

    def log_gamma_u(self, u):
        return -self.h * np.asarray(u, dtype=float)

    def psi_u(self, u):
        return np.full_like(np.asarray(u, dtype=float), self.h)

    def spec_string(self):
        return f"power:H={self.h:g}"


class PowerLogScale(ScaleFunction):
    """gamma(r) = r^H log^beta(1/r); the Holder scale with log corrections.

    Monotonicity near 0 fails above exp(-beta/H) when beta > 0, so the
    default domain is capped accordingly.
    """

    def __init__(self, h: float, beta: float, x_max: float | None = None):
        if not 0 < h < 1:
            raise ValueError("powerlog scale needs H in (0, 1)")
        self.h = float(h)
        self.beta = float(beta)
        if x_max is None:
            x_max = 0.5 if beta <= 0 else min(0.5, 0.8 * math.exp(-beta / h))
        self.x_max = float(x_max)
        if self.beta > 0 and self.x_max >= math.exp(-self.beta / self.h):
            raise ValueError("x_max beyond the monotone range of r^H log^beta(1/r)")
        self.name = f"powerlog(H={h:g},beta={beta:g})"
        self.concave_near_zero = True
        # gamma'' < 0 needs (H - H^2) L^2 > |beta(1-2H)| L + |beta^2 - beta|
        # with L = log(1/r); take the positive root, conservatively
        a = h - h * h
        b = abs(beta * (1.0 - 2.0 * h))
        c = abs(beta * beta - beta)
        l_star = (b + math.sqrt(b * b + 4.0 * a * c)) / (2.0 * a) if a > 0 else 1.0
        self.x_conc = min(0.5 * self.x_max, math.exp(-max(l_star, 1.0)))

    def _gamma(self, a):
        u = -np.log(a)
        return a**self.h * u**self.beta

    def _dgamma(self, a):
        u = -np.log(a)
        return a ** (self.h - 1.0) * u ** (self.beta - 1.0) * (self.h * u - self.beta)

    def psi(self, r):
        a, scalar = _as_array(r)
        u = -np.log(a)
        out = self.h - self.beta / u
        return float(out) if scalar else out

    def log_gamma_u(self, u):
        u = np.asarray(u, dtype=float)
        return -self.h * u + self.beta * np.log(u)

    def psi_u(self, u):
        u = np.asarray(u, dtype=float)
        return self.h - self.beta / u

    def spec_string(self):
        return f"powerlog:H={self.h:g},beta={self.beta:g}"


class LogScale(ScaleFunction):
    """gamma(r) = log^{-beta}(1/r); the logarithmic (roughest) scale."""

    def __init__(self, beta: float, x_max: float = 0.5):
        if beta <= 0:
            raise ValueError("log scale needs beta > 0")
        self.beta = float(beta)
        self.x_max = float(x_max)
        if self.x_max >= 1.0:
            raise ValueError("log scale degenerates at r >= 1")
        self.name = f"logscale(beta={beta:g})"
        self.concave_near_zero = True
        self.x_conc = min(self.x_max, 0.9 * math.exp(-(self.beta + 1.0)))

    def _gamma(self, a):
        return (-np.log(a)) ** (-self.beta)

    def _dgamma(self, a):
        u = -np.log(a)
        return self.beta * u ** (-self.beta - 1.0) / a

    def _inverse_closed(self, v):
        return math.exp(-v ** (-1.0 / self.beta))

    def psi(self, r):
        a, scalar = _as_array(r)
        out = self.beta / -np.log(a)
        return float(out) if scalar else out

    def log_gamma_u(self, u):
        return -self.beta * np.log(np.asarray(u, dtype=float))

    def psi_u(self, u):
        return self.beta / np.asarray(u, dtype=float)

    def spec_string(self):
        return f"logscale:beta={self.beta:g}"


class ExpLogScale(ScaleFunction):
    """gamma(r) = exp(-log^alpha(1/r)), alpha in (0, 1).

    Lies strictly between every Holder scale and the logarithmic scale;
    its lower index is zero.
    """

    def __init__(self, alpha: float, x_max: float = 0.5):
        if not 0 < alpha < 1:
            raise ValueError("explog scale needs alpha in (0, 1)")
        self.alpha = float(alpha)
        self.x_max = float(x_max)
        if self.x_max >= 1.0:
            raise ValueError("explog scale degenerates at r >= 1")
        self.name = f"explog(alpha={alpha:g})"
        self.concave_near_zero = True
        self.x_conc = min(self.x_max, 0.25)

    def _gamma(self, a):
        u = -np.log(a)
        return np.exp(-(u**self.alpha))

    def _dgamma(self, a):
        u = -np.log(a)
        return self._gamma(a) * self.alpha * u ** (self.alpha - 1.0) / a

    def _inverse_closed(self, v):
        return math.exp(-math.log(1.0 / v) ** (1.0 / self.alpha))

    def psi(self, r):
        a, scalar = _as_array(r)
        u = -np.log(a)
        out = self.alpha * u ** (self.alpha - 1.0)
        return float(out) if scalar else out

    def log_gamma_u(self, u):
        u = np.asarray(u, dtype=float)
        return -(u**self.alpha)

    def psi_u(self, u):
        u = np.asarray(u, dtype=float)
        return self.alpha * u ** (self.alpha - 1.0)

    def spec_string(self):
        return f"explog:alpha={self.alpha:g}"


class LogCorrectedScale(ScaleFunction):
    """gamma(r) = log^{-beta}(1/r) * log^alpha(log(1/r)).

    The iterated-log correction of the logarithmic scale.  For beta = 1/2
    continuity of the process requires alpha < 0.
    """

    def __init__(self, beta: float, alpha: float = 0.0, x_max: float | None = None):
        if beta < 0.5:
            raise ValueError("logcorrected scale needs beta >= 1/2")
        if beta == 0.5 and alpha >= 0:
            raise ValueError("beta = 1/2 needs alpha < 0 for a continuous process")
        self.beta = float(beta)
        self.alpha = float(alpha)
        if x_max is None:
            x_max = 0.2
            if alpha > 0:
                x_max = min(x_max, 0.8 * math.exp(-math.exp(1.2 * alpha / beta)))
        self.x_max = float(x_max)
        if self.x_max >= math.exp(-1.0):
            raise ValueError("logcorrected scale needs x_max < 1/e")
        # monotone iff beta*log(log(1/r)) > alpha on the domain
        u0 = math.log(1.0 / self.x_max)
        if self.alpha > 0 and self.beta * math.log(u0) <= self.alpha:
            raise ValueError("x_max beyond the monotone range for these (beta, alpha)")
        self.name = f"logcorrected(beta={beta:g},alpha={alpha:g})"
        self.concave_near_zero = True
        self.x_conc = min(self.x_max, 0.5 * math.exp(-(self.beta + 2.0)))

    def _gamma(self, a):
        u = -np.log(a)
        return u ** (-self.beta) * np.log(u) ** self.alpha

    def _dgamma(self, a):
        u = -np.log(a)
        lu = np.log(u)
        return u ** (-self.beta - 1.0) * lu ** (self.alpha - 1.0) * (
            self.beta * lu - self.alpha
        ) / a

    def psi(self, r):
        a, scalar = _as_array(r)
        u = -np.log(a)
        out = self.beta / u - self.alpha / (u * np.log(u))
        return float(out) if scalar else out

    def log_gamma_u(self, u):
        u = np.asarray(u, dtype=float)
        return -self.beta * np.log(u) + self.alpha * np.log(np.log(u))

    def psi_u(self, u):
        u = np.asarray(u, dtype=float)
        return self.beta / u - self.alpha / (u * np.log(u))

    def spec_string(self):
        return f"logcorrected:beta={self.beta:g},alpha={self.alpha:g}"


class CustomScale(ScaleFunction):
    """Table-backed scale, log-log linear between knots.

    ``knots`` is a sequence of (r, gamma) pairs, strictly increasing in
    both coordinates.  Derivatives use central finite differences with
    step r * 1e-6 and need at least 3 knots within a decade of r.
    """

    def __init__(self, knots, name: str = "custom"):
        pts = sorted((float(r), float(g)) for r, g in knots)
        if len(pts) < 2:
            raise ValueError("custom scale needs at least 2 knots")
        r = np.array([p[0] for p in pts])
        g = np.array([p[1] for p in pts])
        if np.any(r <= 0) or np.any(g <= 0):
            raise ValueError("custom knots must be positive")
        if np.any(np.diff(r) <= 0) or np.any(np.diff(g) <= 0):
            raise ValueError("custom knots must be strictly increasing")
        self.knot_r = r
        self.knot_g = g
        self._log_r = np.log(r)
        self._log_g = np.log(g)
        self.x_max = float(r[-1])
        self.name = name
        self.concave_near_zero = False
        self.x_conc = 0.0

    @classmethod
    def from_csv(cls, path):
        knots = []
        with open(path, newline="") as fh:
            for row in csv.reader(fh):
                if not row or row[0].strip().startswith("#"):
                    continue
                knots.append((float(row[0]), float(row[1])))
        return cls(knots, name=f"custom({path})")

    def _gamma(self, a):
        # log-log linear interpolation; left of the first knot the first
        # segment's slope is extended so gamma(0+) = 0 is preserved
        lr = np.log(a)
        slope0 = (self._log_g[1] - self._log_g[0]) / (self._log_r[1] - self._log_r[0])
        lg = np.interp(lr, self._log_r, self._log_g)
        below = lr < self._log_r[0]
        if np.any(below):
            lg = np.where(
                below, self._log_g[0] + slope0 * (lr - self._log_r[0]), lg
            )
        return np.exp(lg)

    def _dgamma(self, a):
        h = a * 1e-6
        hi = np.minimum(a + h, self.x_max)
        lo = a - h
        return (self._gamma(hi) - self._gamma(lo)) / (hi - lo)

    def psi(self, r):
        a, scalar = _as_array(r)
        for x in np.atleast_1d(a):
            near = np.sum((self.knot_r >= x / 10) & (self.knot_r <= x * 10))
            if near < 3:
                raise ScaleDomainError(
                    f"custom scale: fewer than 3 knots within a decade of r={x:g}"
                )
        out = a * self._dgamma(a) / self._gamma(a)
        return float(out) if scalar else out

    def _inverse_closed(self, v):
        # the log-log interpolant is piecewise linear, hence exactly invertible
        lv = math.log(v)
        lg = self._log_g
        lr = self._log_r
        if lv <= lg[0]:
            slope0 = (lg[1] - lg[0]) / (lr[1] - lr[0])
            return math.exp(lr[0] + (lv - lg[0]) / slope0)
        j = int(np.searchsorted(lg, lv)) - 1
        j = min(max(j, 0), len(lg) - 2)
        slope = (lg[j + 1] - lg[j]) / (lr[j + 1] - lr[j])
        return math.exp(lr[j] + (lv - lg[j]) / slope)

    def spec_string(self):
        return self.name


# ---------------------------------------------------------------------------


def phi_kernel(beta: float, r):
    """Radial potential kernel: r^-beta (beta>0), log(e/(r^1)) (beta=0), 1 (beta<0)."""
    a, scalar = _as_array(r)
    if np.any(a <= 0):
        raise ValueError("phi_kernel needs r > 0; truncate at a resolution first")
    if beta > 0:
        out = a ** (-beta)
    elif beta == 0:
        out = np.log(np.e / np.minimum(a, 1.0))
    else:
        out = np.ones_like(a)
    return float(out) if scalar else out


@dataclass
class IndexReport:
    """Tabulated elasticity and the lower-index bracket it implies."""

    psi_values: list = field(default_factory=list)  # (r, psi(r)) pairs
    liminf_est: float = math.nan
    limsup_est: float = math.nan
    ind_lower: float = math.nan
    ind_upper: float = math.nan
    psi_sqrtlog_limit_est: float = math.nan

    def to_dict(self):
        return {
            "psi_values": [[r, p] for r, p in self.psi_values],
            "liminf_est": self.liminf_est,
            "limsup_est": self.limsup_est,
            "ind_lower": self.ind_lower,
            "ind_upper": self.ind_upper,
            "psi_sqrtlog_limit_est": self.psi_sqrtlog_limit_est,
        }


def lower_index_report(f: ScaleFunction, r_grid) -> IndexReport:
    """Bracket the lower index of gamma by sampling psi on a decreasing grid.

    The liminf/limsup estimates are taken over the smallest sampled decade
    (true limits are unobservable numerically; the grid is recorded so a
    reviewer can extend it).  The report also evaluates
    psi(r) * sqrt(log(1/r)) at the smallest grid point.
    """
    r = np.asarray(sorted(r_grid, reverse=True), dtype=float)
    if r.size < 4 or r[0] / r[-1] < 1e4:
        raise ValueError("r_grid must span at least 4 decades")
    psi = np.array([f.psi(x) for x in r])
    last = r <= r[-1] * 10.0
    rep = IndexReport()
    rep.psi_values = list(zip(r.tolist(), psi.tolist()))
    rep.liminf_est = float(np.min(psi[last]))
    rep.limsup_est = float(np.max(psi[last]))
    rep.ind_lower = rep.liminf_est
    rep.ind_upper = rep.limsup_est
    rep.psi_sqrtlog_limit_est = float(psi[-1] * math.sqrt(math.log(1.0 / r[-1])))
    return rep


# ---------------------------------------------------------------------------


def parse_scale_spec(spec: str) -> ScaleFunction:
    """Build a scale function from a spec string.

    Examples: ``power:H=0.5``, ``logscale:beta=1.0``, ``explog:alpha=0.3``,
    ``powerlog:H=0.3,beta=-1.0``, ``logcorrected:beta=1.0,alpha=0.5``,
    ``custom:path=knots.csv``.
    """
    if ":" not in spec:
        raise ValueError(f"malformed scale spec {spec!r}: expected family:params")
    family, _, rest = spec.partition(":")
    family = family.strip().lower()
    params = {}
    for item in rest.split(","):
        if not item.strip():
            continue
        key, _, val = item.partition("=")
        if not _:
            raise ValueError(f"malformed scale parameter {item!r} in {spec!r}")
        params[key.strip().lower()] = val.strip()

    def fget(key, cast=float):
        if key not in params:
            raise ValueError(f"scale spec {spec!r} missing parameter {key!r}")
        return cast(params.pop(key))

    try:
        if family == "power":
            out = PowerScale(fget("h"), x_max=float(params.pop("x_max", 1.0)))
        elif family == "powerlog":
            x_max = params.pop("x_max", None)
            out = PowerLogScale(
                fget("h"), fget("beta"), x_max=None if x_max is None else float(x_max)
            )
        elif family == "logscale":
            out = LogScale(fget("beta"), x_max=float(params.pop("x_max", 0.5)))
        elif family == "explog":
            out = ExpLogScale(fget("alpha"), x_max=float(params.pop("x_max", 0.5)))
        elif family == "logcorrected":
            xm = params.pop("x_max", None)
            out = LogCorrectedScale(
                fget("beta"),
                alpha=float(params.pop("alpha", 0.0)),
                x_max=None if xm is None else float(xm),
            )
        elif family == "custom":
            out = CustomScale.from_csv(fget("path", cast=str))
        else:
            raise ValueError(f"unknown scale family {family!r}")
    except ValueError:
        raise
    if params:
        raise ValueError(f"unused parameters {sorted(params)} in scale spec {spec!r}")
    return out
