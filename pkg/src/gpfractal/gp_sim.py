"""Exact Gaussian simulation on a time grid.

Covariance matrices come from either the stationary-increment model
R(s,t) = (g2(s) + g2(t) - g2(|t-s|)) / 2 (the canonical model attaining
commensurability with l = 1) or the Volterra representation
R(s,t) = int_0^{s^t} sqrt(g2'(t-u)) sqrt(g2'(s-u)) du, where g2 = gamma^2.
Sampling is exact: Cholesky factor times i.i.d. standard normals, one
counter-based substream per (path, component), so results are bit-stable
regardless of worker count.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "PSDError",
    "QuadratureError",
    "CovMatrix",
    "PathBatch",
    "cov_stationary_increments",
    "cov_volterra",
    "sample_paths",
    "conditional_variance",
]

_MAX_N = 8192  # dense Cholesky cap; estimators upstream never need more
_JITTER_BASE = 1e-14
_JITTER_STEPS = 6


class PSDError(RuntimeError):
    """Covariance failed the positive-semidefiniteness certificate."""


class QuadratureError(RuntimeError):
    """Volterra quadrature failed to converge."""


@dataclass
class CovMatrix:
    """Grid covariance with a lazy Cholesky certificate."""

    grid: np.ndarray
    R: np.ndarray
    label: str = "cov"
    jitter_used: float = 0.0
    _chol: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.R = np.asarray(self.R, dtype=float)
        n = self.grid.size
        if self.R.shape != (n, n):
            raise ValueError("covariance shape does not match grid")
        if np.any(np.diff(self.grid) <= 0):
            raise ValueError("grid times must be strictly increasing")
        if not np.array_equal(self.R, self.R.T):
            self.R = 0.5 * (self.R + self.R.T)

    @property
    def n(self) -> int:
        return self.grid.size

    def cholesky(self) -> np.ndarray:
        """Lower factor L with L L^T = R, escalating jitter on failure.

        Jitter level k adds 1e-14 * mean(diag) * 10^k to the diagonal,
        k = 0..6; failure beyond that rejects the (family, grid) pair.
        """
        if self._chol is not None:
            return self._chol
        base = _JITTER_BASE * float(np.mean(np.diag(self.R)))
        last_err = None
        for k in range(_JITTER_STEPS + 1):
            jitter = 0.0 if k == 0 else base * 10.0**k
            try:
                L = np.linalg.cholesky(self.R + jitter * np.eye(self.n))
            except np.linalg.LinAlgError as err:
                last_err = err
                continue
            self._chol = L
            self.jitter_used = jitter
            return L
        raise PSDError(
            f"{self.label}: Cholesky failed after {_JITTER_STEPS} jitter "
            f"escalations (base {base:.3e}); rejecting this family/grid "
            f"combination ({last_err})"
        )

    def index_of(self, t: float) -> int:
        i = int(np.searchsorted(self.grid, t))
        for j in (i - 1, i, i + 1):
            if 0 <= j < self.n and abs(self.grid[j] - t) <= 1e-9 * max(1.0, abs(t)):
                return j
        raise KeyError(f"time {t} is not a grid point")


def _check_grid(scale, grid):
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 1:
        raise ValueError("grid must be a non-empty 1-d array")
    if grid[0] <= 0:
        raise ValueError("grids exclude t = 0 (gamma(0) = 0 makes R singular)")
    if grid[-1] > scale.x_max * (1 + 1e-12):
        raise ValueError("grid exceeds the scale's domain")
    if grid.size > _MAX_N:
        raise ValueError(f"grid larger than the dense-Cholesky cap {_MAX_N}")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("grid times must be strictly increasing")
    return grid


def cov_stationary_increments(scale, grid) -> CovMatrix:
    """R(s,t) = (g2(s) + g2(t) - g2(|t-s|)) / 2 for g2 = gamma^2.

    PSD is certified a posteriori by the Cholesky factorization.
    """
    grid = _check_grid(scale, grid)
    g2 = scale.gamma2(grid)
    g2diff = scale.gamma2(np.abs(grid[:, None] - grid[None, :]))
    R = 0.5 * (g2[:, None] + g2[None, :] - g2diff)
    cov = CovMatrix(grid=grid, R=R, label=f"stationary[{scale.name}]")
    cov.cholesky()
    return cov


def _volterra_pattern(order: int, levels: int):
    """Unit-interval quadrature pattern refined geometrically toward 0.

    Returns positions p in (0, 1) and weights w with sum(w f(p)) ~
    int_0^1 f: dyadic subintervals [2^-(j+1), 2^-j] carry plain
    Gauss-Legendre panels, and the core [0, 2^-levels] is handled with
    the substitution x = w q^2, which resolves integrable endpoint
    singularities x^a, a > -1, and keeps every node strictly positive.
    """
    x, w = np.polynomial.legendre.leggauss(order)
    pos, wts = [], []
    for j in range(levels):
        lo, hi = 2.0 ** -(j + 1), 2.0**-j
        pos.append(lo + 0.5 * (hi - lo) * (x + 1.0))
        wts.append(0.5 * (hi - lo) * w)
    core = 2.0**-levels
    q = 0.5 * (x + 1.0)
    pos.append(core * q**2)
    wts.append(0.5 * w * core * 2.0 * q)
    return np.concatenate(pos), np.concatenate(wts)


def cov_volterra(scale, grid, n_quad: int = 64, check: bool = True) -> CovMatrix:
    """Covariance of the Volterra model driven by sqrt((gamma^2)') kernels.

    Entries are computed in the offset variable x = min(s,t) - u, so the
    endpoint singularity sits at x = 0 and nodes never cancel against
    the grid times.  Diagonal entries use the exact identity
    int_0^t g2'(t-u) du = g2(t).  n_quad controls the Gauss-Legendre
    order per subinterval (n_quad // 8, at least 8).  With ``check`` the
    build is repeated at doubled order and a relative disagreement above
    1e-6 raises QuadratureError.
    """
    grid = _check_grid(scale, grid)
    if n_quad < 64:
        raise ValueError("n_quad must be at least 64")
    levels = 40

    def build(order):
        p, wts = _volterra_pattern(order, levels)
        n = grid.size
        iu, ju = np.triu_indices(n, k=1)
        m = np.minimum(grid[iu], grid[ju])
        gap = np.abs(grid[iu] - grid[ju])
        X = m[:, None] * p[None, :]
        vals = np.sqrt(scale.dgamma2(X)) * np.sqrt(scale.dgamma2(gap[:, None] + X))
        entries = (m[:, None] * wts[None, :] * vals).sum(axis=1)
        R = np.zeros((n, n))
        R[iu, ju] = entries
        R += R.T
        np.fill_diagonal(R, scale.gamma2(grid))
        return R

    order = max(8, n_quad // 8)
    R = build(order)
    if check:
        R2 = build(2 * order)
        scale_ref = float(np.max(np.abs(R2))) or 1.0
        rel = float(np.max(np.abs(R - R2))) / scale_ref
        if rel > 1e-6:
            raise QuadratureError(
                f"Volterra quadrature not converged: relative change {rel:.3e} "
                f"after doubling the order (order {order} -> {2 * order}, "
                f"levels {levels}, n={grid.size})"
            )
        R = R2
    cov = CovMatrix(grid=grid, R=R, label=f"volterra[{scale.name}]")
    cov.cholesky()
    return cov


# ---------------------------------------------------------------------------


@dataclass
class PathBatch:
    """values[p, i, c] = component c of path p at grid[i]."""

    grid: np.ndarray
    d: int
    n_paths: int
    values: np.ndarray
    seed: int

    def component(self, p: int, c: int) -> np.ndarray:
        return self.values[p, :, c]

    def points(self, p: int) -> np.ndarray:
        """The image points {B(t_i)} in R^d for path p, shape (n, d)."""
        return self.values[p]

    def to_binary(self, path):
        """Little-endian float64 dump with a fixed-size header."""
        n = self.grid.size
        with open(path, "wb") as fh:
            fh.write(b"GPFB")
            fh.write(struct.pack("<IQQQq", 1, n, self.d, self.n_paths, self.seed))
            fh.write(self.grid.astype("<f8").tobytes())
            fh.write(np.ascontiguousarray(self.values, dtype="<f8").tobytes())

    @classmethod
    def from_binary(cls, path):
        with open(path, "rb") as fh:
            magic = fh.read(4)
            if magic != b"GPFB":
                raise ValueError("not a PathBatch file")
            _, n, d, n_paths, seed = struct.unpack("<IQQQq", fh.read(36))
            grid = np.frombuffer(fh.read(8 * n), dtype="<f8").copy()
            values = np.frombuffer(fh.read(8 * n * d * n_paths), dtype="<f8")
            values = values.reshape(n_paths, n, d).copy()
        return cls(grid=grid, d=d, n_paths=n_paths, values=values, seed=seed)

    def to_csv(self, path):
        """Long format: path, component, t, value."""
        with open(path, "w", newline="") as fh:
            fh.write("path,component,t,value\n")
            for p in range(self.n_paths):
                for c in range(self.d):
                    col = self.values[p, :, c]
                    for t, v in zip(self.grid, col):
                        fh.write(f"{p},{c},{float(t)!r},{float(v)!r}\n")


def _substream(seed: int, path: int, comp: int) -> np.random.Generator:
    # Philox is counter-based: the key fixes the stream, so any worker can
    # draw (path, comp) independently and identically.
    key = np.array(
        [np.uint64(seed & 0xFFFFFFFFFFFFFFFF), np.uint64((path << 16) ^ comp)],
        dtype=np.uint64,
    )
    return np.random.Generator(np.random.Philox(key=key))


def sample_paths(cov: CovMatrix, d: int, n_paths: int, seed: int) -> PathBatch:
    """Draw exact Gaussian paths: each component is chol(R) @ z.

    Components are independent copies of the scalar process; the normals
    for (path p, component c) come from the Philox substream keyed by
    (seed, p, c).
    """
    if d < 1 or n_paths < 1:
        raise ValueError("d and n_paths must be positive")
    L = cov.cholesky()
    n = cov.n
    values = np.empty((n_paths, n, d))
    for c in range(d):
        Z = np.empty((n, n_paths))
        for p in range(n_paths):
            Z[:, p] = _substream(seed, p, c).standard_normal(n)
        values[:, :, c] = (L @ Z).T
    return PathBatch(grid=cov.grid, d=d, n_paths=n_paths, values=values, seed=seed)


def conditional_variance(cov: CovMatrix, s: float, t: float) -> float:
    """Var(B0(t) | B0(s)) = R(t,t) - R(s,t)^2 / R(s,s)."""
    i = cov.index_of(s)
    j = cov.index_of(t)
    R = cov.R
    if R[i, i] < 1e-14:
        raise ZeroDivisionError("conditioning on a degenerate coordinate")
    return float(R[j, j] - R[i, j] ** 2 / R[i, i])
