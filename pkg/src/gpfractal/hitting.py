"""Monte Carlo hitting probabilities and the capacity/content sandwich.

The hitting estimate is a grid under-estimate of the continuous event;
a guard ties the spatial tolerance to the modulus-of-continuity bound
gamma(step) sqrt(2 log n) so the bias stays controlled.  The sandwich
compares p_hat against a capacity term (lower bound) and a Hausdorff
content term (upper bound) of the product set E x F in the metric
rho = max(delta, Euclidean), with instances near the critical product
dimension d excluded as uninformative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dimension import _dist_to_members, dim_rho_product
from .energy import capacity_estimate
from .fractal_sets import CantorSet
from .gp_sim import CovMatrix, sample_paths
from .metrics import FromCovariance

__all__ = [
    "HitProbReport",
    "SmallBallReport",
    "wilson_interval",
    "grid_tolerance_guard",
    "sample_F_points",
    "product_atoms",
    "rho_metric_fn",
    "hit_probability_mc",
    "small_ball_mc",
    "small_ball_sweep",
    "hausdorff_content_estimate",
    "sandwich_report",
]


def wilson_interval(k: int, n: int, z: float = 1.959964) -> tuple[float, float]:
    """95% Wilson score interval for a binomial proportion."""
    if n == 0:
        return 0.0, 1.0
    p = k / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return max(center - half, 0.0), min(center + half, 1.0)


def grid_tolerance_guard(scale, step: float, grid_n: int, d: int) -> float:
    """Smallest admissible tol: 3 gamma(step) sqrt(2 log n) sqrt(d).

    gamma(r) sqrt(log(1/r)) is the modulus of continuity up to constants;
    three times its grid-step value bounds the displacement the discrete
    minimum can hide.
    """
    return 3.0 * scale.gamma(step) * math.sqrt(2.0 * math.log(max(grid_n, 2))) * math.sqrt(d)


@dataclass
class HitProbReport:
    p_hat: float
    ci_low: float
    ci_high: float
    n_paths: int
    tol: float
    grid_n: int
    e_spec: dict
    f_spec: list
    capacity_term: float
    content_term: float
    dim_rho_est: float = math.nan
    capacity_verdict: str = ""
    extras: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "p_hat": self.p_hat,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "n_paths": self.n_paths,
            "tol": self.tol,
            "grid_n": self.grid_n,
            "E": self.e_spec,
            "F": self.f_spec,
            "capacity_term": self.capacity_term,
            "content_term": self.content_term,
            "dim_rho_est": self.dim_rho_est,
            "capacity_verdict": self.capacity_verdict,
            "extras": self.extras,
        }


def sample_F_points(members, spacing: float | None = None, cap: int = 400):
    """Deterministic lattice sample of a union of boxes/balls.

    Returns (points, spacing_used); the spacing is the lattice pitch,
    which downstream estimators use as their resolution floor.
    """
    pitch = spacing
    if pitch is None:
        sides = []
        for m in members:
            if m["type"] == "box":
                sides.append(float(np.max(np.asarray(m["hi"]) - np.asarray(m["lo"]))))
            else:
                sides.append(2.0 * m["radius"])
        pitch = min(sides) / 6.0
    pts = []
    for m in members:
        if m["type"] == "box":
            lo = np.asarray(m["lo"], dtype=float)
            hi = np.asarray(m["hi"], dtype=float)
            c = None
        else:
            c = np.asarray(m["center"], dtype=float)
            lo, hi = c - m["radius"], c + m["radius"]
        axes = [
            np.arange(l, u + 1e-12, pitch) if u > l else np.array([l])
            for l, u in zip(lo, hi)
        ]
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(lo))
        if m["type"] == "ball":
            mesh = mesh[np.linalg.norm(mesh - c, axis=1) <= m["radius"] + 1e-12]
            if mesh.size == 0:
                mesh = c[None, :]
        pts.append(mesh)
    out = np.vstack(pts)
    if len(out) > cap:
        stride = int(math.ceil(len(out) / cap))
        out = out[::stride]
    return out, pitch


def product_atoms(times, f_points) -> np.ndarray:
    """All (t, x) pairs as rows of a (m, 1 + d) array."""
    times = np.asarray(times, dtype=float).ravel()
    f_points = np.atleast_2d(f_points)
    t_rep = np.repeat(times, len(f_points))
    x_rep = np.tile(f_points, (len(times), 1))
    return np.column_stack([t_rep, x_rep])


def rho_metric_fn(scale, atoms):
    """metric(i, idx) -> rho distances for product atoms (t, x)."""
    atoms = np.atleast_2d(atoms)
    times = atoms[:, 0]
    space = atoms[:, 1:]

    def metric(i, idx):
        dt = scale.gamma(np.abs(times[idx] - times[i]))
        dx = np.linalg.norm(space[idx] - space[i], axis=1)
        return np.maximum(dt, dx)

    return metric


def delta_metric_fn(scale, times):
    times = np.asarray(times, dtype=float).ravel()

    def metric(i, idx):
        return scale.gamma(np.abs(times[idx] - times[i]))

    return metric


def _e_grid(E, grid, scale):
    """Grid times of E: Cantor atoms or the sub-grid inside an interval."""
    if isinstance(E, CantorSet):
        return np.unique(E.atoms())
    a, b = float(E[0]), float(E[1])
    return grid[(grid >= a - 1e-12) & (grid <= b + 1e-12)]


def hit_probability_mc(
    scale,
    cov: CovMatrix,
    E,
    F_members,
    d: int,
    tol: float,
    n_paths: int,
    seed: int,
    batch=None,
    with_terms: bool = True,
    capacity_resolutions=None,
) -> HitProbReport:
    """P{B(E) intersects F} by Monte Carlo over exact paths.

    A path hits when some grid point of E has its image within ``tol``
    of F.  ``batch`` allows reusing a PathBatch across several F at a
    fixed seed (the per-path indicator is then monotone in F and in tol
    by construction).  ``with_terms`` adds the capacity and content
    terms of E x F used by the sandwich.
    """
    grid = cov.grid
    e_idx = np.searchsorted(grid, _e_grid(E, grid, scale))
    e_idx = np.unique(np.clip(e_idx, 0, len(grid) - 1))
    if e_idx.size == 0:
        raise ValueError("E contains no grid points")
    step = float(np.max(np.diff(grid))) if len(grid) > 1 else 0.0
    guard = grid_tolerance_guard(scale, step, len(grid), d) if step else 0.0
    if tol < guard * (1.0 - 1e-9):
        raise ValueError(
            f"grid too coarse for tol: tol = {tol:g} < guard {guard:g} "
            f"(3 gamma(step) sqrt(2 log n) sqrt(d))"
        )
    if batch is None:
        batch = sample_paths(cov, d=d, n_paths=n_paths, seed=seed)
    hits = 0
    for p in range(batch.n_paths):
        pts = batch.values[p][e_idx]
        if float(np.min(_dist_to_members(pts, F_members))) <= tol:
            hits += 1
    p_hat = hits / batch.n_paths
    lo, hi = wilson_interval(hits, batch.n_paths)

    cap_val = math.nan
    content = math.nan
    dim_rho = math.nan
    cap_verdict = ""
    if with_terms:
        times = grid[e_idx]
        f_pts, f_pitch = sample_F_points(F_members)
        t_budget = max(16, 9000 // max(len(f_pts), 1))
        t_sub = times[:: max(1, int(math.ceil(len(times) / t_budget)))]
        # resolution floor: below the sampling pitch of either factor the
        # product atoms are isolated and capacity/content see only
        # discreteness artifacts
        dt = float(np.min(np.diff(t_sub))) if len(t_sub) > 1 else 0.0
        floor = max(scale.gamma(dt) if dt else 0.0, f_pitch)
        atoms = product_atoms(t_sub, f_pts)
        metric = rho_metric_fn(scale, atoms)
        diam = _product_diameter(scale, atoms)
        if capacity_resolutions is None:
            capacity_resolutions = [
                r for j in range(1, 9) if (r := diam / 2.0**j) >= floor
            ] or [diam / 2.0, diam / 4.0]
        rep = capacity_estimate(atoms, metric, beta=float(d), resolutions=capacity_resolutions)
        cap_val = rep.capacity_value
        cap_verdict = rep.verdict
        content = hausdorff_content_estimate(
            t_sub, f_pts, s_exponent=float(d), scale=scale, r_floor=floor
        )
        e_arg = E if isinstance(E, CantorSet) else [(float(E[0]), float(E[1]))]
        dim_rho = dim_rho_product(e_arg, F_members, scale).value

    e_spec = (
        {"type": "cantor", "zeta": E.zeta, "depth": E.depth, "eps0": E.eps0}
        if isinstance(E, CantorSet)
        else {"type": "interval", "a": float(E[0]), "b": float(E[1])}
    )
    return HitProbReport(
        p_hat=p_hat,
        ci_low=lo,
        ci_high=hi,
        n_paths=batch.n_paths,
        tol=tol,
        grid_n=len(grid),
        e_spec=e_spec,
        f_spec=list(F_members),
        capacity_term=cap_val,
        content_term=content,
        dim_rho_est=dim_rho,
        capacity_verdict=cap_verdict,
        extras={"hits": hits, "seed": seed, "guard": guard},
    )


def _product_diameter(scale, atoms) -> float:
    t = atoms[:, 0]
    x = atoms[:, 1:]
    dt = scale.gamma(min(float(t.max() - t.min()), scale.x_max))
    dx = float(np.linalg.norm(x.max(axis=0) - x.min(axis=0)))
    return max(dt, dx, 1e-12)


# ---------------------------------------------------------------------------
# small-ball probabilities


@dataclass
class SmallBallReport:
    p_hat: float
    ci_low: float
    ci_high: float
    r: float
    n_ball_points: int
    ref_r_d: float
    ref_fgamma_d: float

    def to_dict(self):
        return {
            "p_hat": self.p_hat,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "r": self.r,
            "n_ball_points": self.n_ball_points,
            "ref_r_d": self.ref_r_d,
            "ref_fgamma_d": self.ref_fgamma_d,
        }


def small_ball_mc(
    cov: CovMatrix,
    t0: float,
    r: float,
    z,
    d: int,
    n_paths: int,
    seed: int,
    scale=None,
    l: float = 1.0,
    batch=None,
) -> SmallBallReport:
    """P{ min over the delta-ball B(t0, r) of ||B(s) - z|| <= r }.

    When the scale is supplied, the ball is measured with the stationary
    surrogate gamma(|s - t0|), which handles arbitrary t0 in [a, b] and
    can be genuinely empty on a coarse grid; otherwise t0 snaps to the
    nearest grid point and the process's own metric is used.  Reference
    values r^d and (r + f(r))^d are attached when the scale is supplied
    (f is the entropy-integral majorant).
    """
    if scale is not None:
        dvec = np.asarray(scale.gamma(np.minimum(np.abs(cov.grid - t0), scale.x_max)))
    else:
        model = FromCovariance(cov)
        t0 = float(cov.grid[int(np.argmin(np.abs(cov.grid - t0)))])
        dvec = np.asarray(model.delta(t0, cov.grid))
    idx = np.flatnonzero(dvec <= r)
    if idx.size == 0:
        raise ValueError("empty delta-ball on the grid")
    if batch is None:
        batch = sample_paths(cov, d=d, n_paths=n_paths, seed=seed)
    z = np.asarray(z, dtype=float).reshape(1, -1)
    hits = 0
    for p in range(batch.n_paths):
        pts = batch.values[p][idx]
        if float(np.min(np.linalg.norm(pts - z, axis=1))) <= r:
            hits += 1
    p_hat = hits / batch.n_paths
    lo, hi = wilson_interval(hits, batch.n_paths)
    ref_f = math.nan
    if scale is not None:
        from .conditions import f_gamma

        try:
            ref_f = (r + f_gamma(scale, r, l=l)) ** d
        except Exception:
            ref_f = math.nan
    return SmallBallReport(
        p_hat=p_hat,
        ci_low=lo,
        ci_high=hi,
        r=r,
        n_ball_points=int(idx.size),
        ref_r_d=r**d,
        ref_fgamma_d=ref_f,
    )


def small_ball_sweep(cov, t0, radii, z, d, n_paths, seed, scale=None, l=1.0):
    """One shared path batch across a radius sweep (nested balls)."""
    batch = sample_paths(cov, d=d, n_paths=n_paths, seed=seed)
    return [
        small_ball_mc(cov, t0, r, z, d, n_paths, seed, scale=scale, l=l, batch=batch)
        for r in radii
    ]


# ---------------------------------------------------------------------------
# Hausdorff content


def hausdorff_content_estimate(
    E_times,
    F_points,
    s_exponent: float,
    scale,
    menu_depth: int = 8,
    r_floor: float = 0.0,
) -> float:
    """Greedy multi-scale cover of E x F by rho-balls; returns sum (2r)^s.

    Centers are taken at the first uncovered product point; the radius
    comes from a dyadic menu, choosing the smallest marginal (2r)^s per
    newly covered point.  Any greedy cover upper-bounds the content, so
    the returned value is the minimum over nested menu truncations,
    which also makes menu refinement monotone by construction.

    ``r_floor`` keeps the menu above the sampling resolution of the
    finite point sets: below it a cover sees isolated atoms, whose
    content vanishes no matter what the underlying set is.
    """
    times = np.asarray(E_times, dtype=float).ravel()
    f_pts = np.atleast_2d(F_points)
    atoms = product_atoms(times, f_pts)
    t = atoms[:, 0]
    x = atoms[:, 1:]
    diam = _product_diameter(scale, atoms)
    best = math.inf
    for depth in range(1, menu_depth + 1):
        menu = [diam / 2.0**j for j in range(depth + 1)]
        menu = [r for r in menu if r >= r_floor] or [max(diam, r_floor)]
        total = 0.0
        covered = np.zeros(len(atoms), dtype=bool)
        while not covered.all() and total < best:
            i = int(np.argmin(covered))
            dt = scale.gamma(np.minimum(np.abs(t - t[i]), scale.x_max))
            dx = np.linalg.norm(x - x[i], axis=1)
            rho = np.maximum(dt, dx)
            best_cost, best_r, best_mask = math.inf, menu[0], None
            for r in menu:
                mask = ~covered & (rho <= r)
                newly = int(np.sum(mask))
                if newly == 0:
                    continue
                cost = (2.0 * r) ** s_exponent / newly
                if cost < best_cost:
                    best_cost, best_r, best_mask = cost, r, mask
            if best_mask is None:
                covered[i] = True  # isolated point below the finest radius
                total += (2.0 * menu[-1]) ** s_exponent
                continue
            covered |= best_mask
            covered[i] = True
            total += (2.0 * best_r) ** s_exponent
        best = min(best, total)
    return best


# ---------------------------------------------------------------------------
# sandwich verdicts


def sandwich_report(reports: list[HitProbReport], d: int, critical_band: float = 0.15):
    """Joint-constant consistency check of the two hitting bounds.

    The fitted constants are the battery-wide joint pair: C1_hat is the
    largest constant with C1_hat * capacity <= ci_high on every
    non-critical instance (the min of the per-instance ratios), and
    C2_hat the smallest with p_hat <= C2_hat * content (the max).  PASS
    requires both bounds to hold with that single pair, the capacity
    verdict to agree with the Monte Carlo dichotomy (capacity positive
    iff the CI at the finest tolerance excludes 0), and C1_hat > 0
    whenever some instance genuinely hits.  Instances with
    |dim_rho(E x F) - d| <= critical_band are excluded and labeled as
    carrying no information.  The max p_hat/capacity ratio is reported
    as a sharpness diagnostic alongside.
    """
    if len(reports) < 6:
        raise ValueError("battery too small: need at least 6 instances")
    rows = []
    ratios_c1, ratios_c2 = [], []
    for idx, rep in enumerate(reports):
        critical = abs(rep.dim_rho_est - d) <= critical_band
        row = {
            "instance": idx,
            "p_hat": rep.p_hat,
            "ci_low": rep.ci_low,
            "ci_high": rep.ci_high,
            "capacity": rep.capacity_term,
            "content": rep.content_term,
            "dim_rho": rep.dim_rho_est,
            "critical": critical,
            "status": "critical - no information" if critical else "ok",
        }
        rows.append(row)
        if critical:
            continue
        if rep.capacity_term > 0 and rep.p_hat > 0:
            ratios_c1.append(rep.p_hat / rep.capacity_term)
        if rep.content_term > 0:
            ratios_c2.append(rep.p_hat / rep.content_term)
    c1 = min(ratios_c1) if ratios_c1 else 0.0
    c1_sharp = max(ratios_c1) if ratios_c1 else 0.0
    c2 = max(ratios_c2) if ratios_c2 else 0.0
    all_pass = True
    any_noncritical = False
    for row, rep in zip(rows, reports):
        if row["critical"]:
            continue
        any_noncritical = True
        ok_lower = (rep.capacity_term <= 0) or (
            c1 * rep.capacity_term <= rep.ci_high + 1e-12
        )
        ok_upper = (rep.content_term > 0) and (
            rep.p_hat <= c2 * rep.content_term + 1e-12
        )
        dichotomy = (rep.capacity_term > 0) == (rep.ci_low > 0.0) or rep.p_hat == 0.0
        if not ok_lower:
            row["status"] = "fail-lower"
        elif not ok_upper:
            row["status"] = "fail-upper"
        elif not dichotomy:
            row["status"] = "fail-dichotomy"
        all_pass &= row["status"] == "ok"
    if not any_noncritical:
        all_pass = False
    return {
        "c1_hat": c1,
        "c2_hat": c2,
        "c1_sharp": c1_sharp,
        "pass": bool(all_pass),
        "rows": rows,
    }
