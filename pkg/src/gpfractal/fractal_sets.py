"""Generalized Cantor sets in the gamma metric, their mass measure, and
covering machinery.

The construction keeps two children of length t_k * eps0 at the extreme
ends of each parent interval, with t_k = gamma^{-1}(2^{-k/zeta}), so the
limit set has dimension zeta with respect to delta*(s,t) = gamma(|t-s|).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "CantorSet",
    "DiscreteMeasure",
    "RatioOverflowError",
    "build_cantor",
    "cantor_measure",
    "gamma_dyadic_count",
    "gamma_dyadic_cover",
    "covering_number_delta",
    "packing_number_delta",
]


class RatioOverflowError(ValueError):
    """The two children would not fit disjointly in their parent."""


@dataclass
class CantorSet:
    scale: object
    zeta: float
    depth: int
    eps0: float
    #: levels[k] is a (2^k, 2) array of [left, right] interval endpoints
    levels: list = field(default_factory=list)
    t_seq: np.ndarray | None = None  # t_0 = 1, t_k = gamma^{-1}(2^{-k/zeta})
    l_seq: np.ndarray | None = None  # l_k = t_k / t_{k-1}

    def intervals(self, k: int | None = None) -> np.ndarray:
        return self.levels[self.depth if k is None else k]

    def atoms(self) -> np.ndarray:
        """Midpoints of the deepest-level intervals."""
        deepest = self.levels[self.depth]
        return 0.5 * (deepest[:, 0] + deepest[:, 1])

    def to_json(self, path=None):
        payload = {
            "scale": self.scale.spec_string(),
            "zeta": self.zeta,
            "depth": self.depth,
            "eps0": self.eps0,
            "t_seq": self.t_seq.tolist(),
            "l_seq": self.l_seq.tolist(),
            "deepest_intervals": self.levels[self.depth].tolist(),
        }
        if path is None:
            return payload
        with open(path, "w") as fh:
            json.dump(payload, fh, sort_keys=True, indent=2)
        return payload


@dataclass
class DiscreteMeasure:
    """Probability measure with finitely many atoms.

    ``atoms`` is (m,) for measures on the time line or (m, 1 + d) for
    measures on time x space products.
    """

    atoms: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.atoms = np.asarray(self.atoms, dtype=float)
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.ndim != 1 or len(self.weights) != len(self.atoms):
            raise ValueError("weights must align with atoms")
        if np.any(self.weights < 0):
            raise ValueError("weights must be nonnegative")
        if abs(float(np.sum(self.weights)) - 1.0) > 1e-12:
            raise ValueError("weights must sum to 1")

    @property
    def n(self) -> int:
        return len(self.weights)

    def ball_mass_time(self, model, t: float, r: float) -> float:
        """nu(B_delta(t, r)) for a measure on the time line."""
        d = model.delta(t, self.atoms)
        return float(np.sum(self.weights[np.asarray(d) <= r]))

    def atoms_to_csv(self, path):
        with open(path, "w", newline="") as fh:
            cols = 1 if self.atoms.ndim == 1 else self.atoms.shape[1]
            header = ["weight"] + [f"x{i}" for i in range(cols)]
            fh.write(",".join(header) + "\n")
            for w, a in zip(self.weights, np.atleast_2d(self.atoms.T).T):
                vals = [a] if np.ndim(a) == 0 else list(a)
                fh.write(",".join([repr(float(w))] + [repr(float(v)) for v in vals]))
                fh.write("\n")


def build_cantor(scale, zeta: float, depth: int, eps0: float = 1.0) -> CantorSet:
    """Construct the two-children Cantor set adapted to the scale.

    Children sit at the extreme ends of their parent (maximal separation).
    Raises RatioOverflowError when some l_k = t_k / t_{k-1} exceeds 1/2,
    i.e. the two children of combined length 2 t_k eps0 would overflow the
    parent of length t_{k-1} eps0 - the construction is infeasible for
    this (gamma, zeta, depth).
    """
    if zeta <= 0:
        raise ValueError("zeta must be positive")
    if not 0 <= depth <= 40:
        raise ValueError("depth must be in [0, 40]")
    if not 0 < eps0 <= 1:
        raise ValueError("eps0 must be in (0, 1]")
    gxmax = scale.gamma(scale.x_max)
    t = [1.0]
    for k in range(1, depth + 1):
        target = 2.0 ** (-k / zeta)
        if target > gxmax * (1 + 1e-12):
            raise ValueError(
                f"t_{k} not computable: 2^(-k/zeta) = {target:.3e} exceeds "
                f"gamma(x_max) = {gxmax:.3e}"
            )
        t.append(float(scale.inverse(target, tol=1e-15)))
    t_seq = np.array(t)
    l_seq = t_seq[1:] / t_seq[:-1] if depth >= 1 else np.array([])
    for k, l in enumerate(l_seq, start=1):
        if l > 0.5 + 1e-12:
            raise RatioOverflowError(
                f"ratio overflow at level {k}: l_{k} = {l:.6f} > 1/2 "
                f"(children of combined length > parent)"
            )

    levels = [np.array([[0.0, eps0]])]
    for k in range(1, depth + 1):
        parents = levels[-1]
        length = t_seq[k] * eps0
        children = np.empty((2 * parents.shape[0], 2))
        children[0::2, 0] = parents[:, 0]
        children[0::2, 1] = parents[:, 0] + length
        children[1::2, 0] = parents[:, 1] - length
        children[1::2, 1] = parents[:, 1]
        levels.append(children)
    return CantorSet(
        scale=scale,
        zeta=zeta,
        depth=depth,
        eps0=eps0,
        levels=levels,
        t_seq=t_seq,
        l_seq=l_seq,
    )


def cantor_measure(cs: CantorSet) -> DiscreteMeasure:
    """Mass-distribution measure: one atom per deepest interval, weight 2^-K.

    By construction every level-k ancestor interval carries mass 2^-k.
    """
    atoms = cs.atoms()
    w = np.full(atoms.size, 1.0 / atoms.size)
    return DiscreteMeasure(atoms=atoms, weights=w)


# ---------------------------------------------------------------------------
# gamma-dyadic coverings


def _intervals_of(E) -> np.ndarray:
    """Normalize E to an (m, 2) array of closed intervals.

    Accepts a CantorSet (its deepest level), an array of points
    (degenerate intervals), or a sequence of (a, b) pairs.
    """
    if isinstance(E, CantorSet):
        return E.intervals()
    arr = np.asarray(E, dtype=float)
    if arr.ndim == 1:
        return np.column_stack([arr, arr])
    if arr.ndim == 2 and arr.shape[1] == 2:
        return arr
    raise ValueError("E must be a CantorSet, points, or (a, b) interval pairs")


def _tile_ranges(E, n: int, scale):
    """First/last level-n tile index per component of E, as floats.

    Tiles are half-open: tile j covers [(j-1) w, j w) with
    w = gamma^{-1}(2^-n); a right endpoint that is an exact multiple of w
    joins the next tile only if the interval has interior there.  Indices
    are kept in float64 because deep levels of slow scales produce tile
    counts far beyond int64.
    """
    w = float(scale.inverse(2.0 ** (-n), tol=1e-15))
    if w <= 0 or not math.isfinite(w):
        raise ValueError(f"gamma-dyadic width underflows at level {n}")
    iv = _intervals_of(E)
    a, b = iv[:, 0], iv[:, 1]
    j1 = np.floor(a / w) + 1.0
    j2 = np.where(b > a, np.ceil(b / w), j1)
    j2 = np.maximum(j1, j2)
    return w, j1, j2


def gamma_dyadic_count(E, n: int, scale) -> float:
    """Number of level-n gamma-dyadic tiles meeting E (no materialization)."""
    w, j1, j2 = _tile_ranges(E, n, scale)
    order = np.argsort(j1)
    j1, j2 = j1[order], j2[order]
    count = 0.0
    cur_end = None
    for lo, hi in zip(j1, j2):
        if cur_end is None or lo > cur_end:
            count += hi - lo + 1.0
            cur_end = hi
        elif hi > cur_end:
            count += hi - cur_end
            cur_end = hi
    return float(count)


def gamma_dyadic_cover(E, n: int, scale, max_tiles: int = 1_000_000) -> np.ndarray:
    """The minimal set of level-n gamma-dyadic intervals meeting E.

    Returns an (m, 2) array of [left, right] tiles.  Refuses to
    materialize more than ``max_tiles`` (use gamma_dyadic_count for
    super-geometric regimes).
    """
    w, j1, j2 = _tile_ranges(E, n, scale)
    total = gamma_dyadic_count(E, n, scale)
    if total > max_tiles:
        raise ValueError(f"cover would materialize {total:.3e} tiles")
    if np.any(j2 > 2.0**53):
        raise ValueError(f"tile indices at level {n} exceed exact integer range")
    tiles = set()
    for lo, hi in zip(j1, j2):
        tiles.update(range(int(lo), int(hi) + 1))
    js = np.array(sorted(tiles), dtype=float)
    return np.column_stack([(js - 1) * w, js * w])


# ---------------------------------------------------------------------------
# covering and packing numbers in an arbitrary time metric


def covering_number_delta(E, r: float, model) -> int:
    """Greedy covering count: repeatedly cover the leftmost uncovered
    point with a delta-ball.

    The ball is centered at the rightmost set point still within r of
    the uncovered point, so it reaches as far right as the point
    placement allows (centering at the point itself would waste half of
    every ball on already-covered territory).
    """
    pts = np.sort(np.asarray(E, dtype=float).ravel())
    if pts.size == 0:
        return 0
    covered = np.zeros(pts.size, dtype=bool)
    count = 0
    while not covered.all():
        i = int(np.argmin(covered))  # leftmost uncovered
        d_from_p = np.asarray(model.delta(pts[i], pts))
        candidates = np.flatnonzero(d_from_p <= r)
        c = int(candidates[-1]) if candidates.size else i
        d = np.asarray(model.delta(pts[c], pts))
        covered |= d <= r
        covered[i] = True
        count += 1
    return count


def packing_number_delta(E, r: float, model) -> int:
    """Left-to-right maximal r-separated subset size."""
    pts = np.sort(np.asarray(E, dtype=float).ravel())
    if pts.size == 0:
        return 0
    chosen = [pts[0]]
    for p in pts[1:]:
        d = np.asarray(model.delta(p, np.array(chosen)))
        if np.all(d > r):
            chosen.append(p)
    return len(chosen)
