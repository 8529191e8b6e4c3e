"""Command-line front end: validated JSON configs in, reports out.

Every command writes deterministic CSV/JSON payloads (identical bytes
for identical configs and seeds, whatever --threads says) plus a
manifest that holds the config hash, timings and library versions - the
only place a timestamp appears.  Exit codes: 0 success, 2 config
validation error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .conditions import (
    IntegralError,
    check_strong_condition,
    check_weak_condition,
    psi_sqrtlog_criterion,
)
from .dimension import image_dimension_experiment
from .energy import capacity_estimate
from .fractal_sets import RatioOverflowError, build_cantor, cantor_measure
from .gp_sim import (
    PSDError,
    QuadratureError,
    cov_stationary_increments,
    cov_volterra,
    sample_paths,
)
from .hitting import (
    delta_metric_fn,
    hit_probability_mc,
    product_atoms,
    rho_metric_fn,
    sample_F_points,
    sandwich_report,
)
from .scale import ScaleDomainError, parse_scale_spec

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

_NUMERICAL_ERRORS = (
    PSDError,
    QuadratureError,
    IntegralError,
    RatioOverflowError,
    ScaleDomainError,
    np.linalg.LinAlgError,
)


class ConfigError(ValueError):
    def __init__(self, field, message):
        self.field = field
        super().__init__(f"config field {field!r}: {message}")


def _require(cfg: dict, key: str, kind, predicate=None, what: str = ""):
    if key not in cfg:
        raise ConfigError(key, "missing")
    val = cfg[key]
    if kind is float and isinstance(val, int):
        val = float(val)
    if not isinstance(val, kind):
        raise ConfigError(key, f"expected {getattr(kind, '__name__', kind)}")
    if predicate is not None and not predicate(val):
        raise ConfigError(key, what or "invalid value")
    return val


def _parse_gamma(cfg):
    spec = _require(cfg, "gamma", str)
    try:
        return parse_scale_spec(spec)
    except ValueError as err:
        raise ConfigError("gamma", str(err))


def _parse_grid(cfg, scale):
    grid_cfg = _require(cfg, "grid", dict)
    a = _require(grid_cfg, "a", float, lambda v: v > 0, "must be > 0")
    b = _require(grid_cfg, "b", float, lambda v: v > a, "must exceed a")
    n = _require(grid_cfg, "n", int, lambda v: 2 <= v <= 8192, "must be in [2, 8192]")
    if b > scale.x_max:
        raise ConfigError("grid.b", f"exceeds the scale domain x_max={scale.x_max}")
    return np.linspace(a, b, n)


def _parse_E(cfg, scale):
    e = _require(cfg, "E", dict)
    etype = _require(e, "type", str)
    if etype == "interval":
        a = _require(e, "a", float, lambda v: v > 0, "must be > 0")
        b = _require(e, "b", float, lambda v: v > a, "must exceed a")
        return (a, b)
    if etype == "cantor":
        zeta = _require(e, "zeta", float, lambda v: v > 0, "must be > 0")
        depth = _require(e, "depth", int, lambda v: 0 <= v <= 40, "must be in [0, 40]")
        eps0 = float(e.get("eps0", 1.0))
        return build_cantor(scale, zeta, depth, eps0)
    raise ConfigError("E.type", f"unknown set type {etype!r}")


def _parse_F(cfg, d):
    members = _require(cfg, "F", list, lambda v: len(v) > 0, "must be non-empty")
    out = []
    for i, m in enumerate(members):
        if not isinstance(m, dict) or "type" not in m:
            raise ConfigError(f"F[{i}]", "expected an object with a 'type'")
        if m["type"] == "box":
            lo = m.get("lo")
            hi = m.get("hi")
            if not (isinstance(lo, list) and isinstance(hi, list) and len(lo) == d and len(hi) == d):
                raise ConfigError(f"F[{i}]", f"box needs lo/hi of length d={d}")
            out.append({"type": "box", "lo": [float(v) for v in lo], "hi": [float(v) for v in hi]})
        elif m["type"] == "ball":
            c = m.get("center")
            r = m.get("radius")
            if not (isinstance(c, list) and len(c) == d and isinstance(r, (int, float)) and r > 0):
                raise ConfigError(f"F[{i}]", f"ball needs center of length d={d} and radius > 0")
            out.append({"type": "ball", "center": [float(v) for v in c], "radius": float(r)})
        else:
            raise ConfigError(f"F[{i}].type", f"unknown member type {m['type']!r}")
    return out


def _json_payload(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _write_manifest(out_dir: Path, name: str, cfg: dict, outputs: list, t0: float):
    manifest = {
        "command": name,
        "config": cfg,
        "config_sha256": hashlib.sha256(
            json.dumps(cfg, sort_keys=True).encode()
        ).hexdigest(),
        "outputs": [str(p) for p in outputs],
        "elapsed_s": round(time.time() - t0, 3),
        "created_unix": int(time.time()),
        "versions": {"gpfractal": __version__, "numpy": np.__version__},
    }
    _write(out_dir / f"{name}_manifest.json", _json_payload(manifest))


def _load_config(args) -> dict:
    try:
        cfg = json.loads(Path(args.config).read_text())
    except FileNotFoundError:
        raise ConfigError("--config", f"file not found: {args.config}")
    except json.JSONDecodeError as err:
        raise ConfigError("--config", f"invalid JSON: {err}")
    if not isinstance(cfg, dict):
        raise ConfigError("--config", "top level must be an object")
    if args.seed is not None:
        cfg["seed"] = args.seed
    return cfg


def _seed(cfg) -> int:
    return _require(cfg, "seed", int, lambda v: v >= 0, "must be >= 0")


def _build_cov(cfg, scale, grid):
    model = cfg.get("cov", "stationary")
    if model == "stationary":
        return cov_stationary_increments(scale, grid)
    if model == "volterra":
        return cov_volterra(scale, grid, n_quad=int(cfg.get("n_quad", 64)))
    raise ConfigError("cov", f"unknown covariance model {model!r}")


# -- commands ----------------------------------------------------------------


def cmd_simulate(cfg, out_dir: Path, threads: int, trace: bool) -> list:
    scale = _parse_gamma(cfg)
    grid = _parse_grid(cfg, scale)
    d = _require(cfg, "d", int, lambda v: v >= 1, "must be >= 1")
    n_paths = _require(cfg, "n_paths", int, lambda v: v >= 1, "must be >= 1")
    seed = _seed(cfg)
    cov = _build_cov(cfg, scale, grid)
    batch = sample_paths(cov, d=d, n_paths=n_paths, seed=seed)
    bin_path = out_dir / "paths.bin"
    csv_path = out_dir / "paths.csv"
    out_dir.mkdir(parents=True, exist_ok=True)
    batch.to_binary(bin_path)
    batch.to_csv(csv_path)
    return [bin_path, csv_path]


def cmd_dims(cfg, out_dir: Path, threads: int, trace: bool) -> list:
    scale = _parse_gamma(cfg)
    E = _parse_E(cfg, scale)
    d = _require(cfg, "d", int, lambda v: v >= 1, "must be >= 1")
    n_paths = _require(cfg, "n_paths", int, lambda v: v >= 1, "must be >= 1")
    grid_n = _require(cfg, "grid_n", int, lambda v: 16 <= v <= 8192, "must be in [16, 8192]")
    seed = _seed(cfg)
    report = image_dimension_experiment(
        scale, E, d=d, n_paths=n_paths, grid_n=grid_n, seed=seed, threads=threads
    )
    json_path = out_dir / "dims_report.json"
    csv_path = out_dir / "dims_counts.csv"
    _write(json_path, _json_payload(report.to_dict()))
    lines = ["scale,count"]
    for s, c in report.dim_delta.counts:
        lines.append(f"{s!r},{c!r}")
    _write(csv_path, "\n".join(lines) + "\n")
    return [json_path, csv_path]


def cmd_hit(cfg, out_dir: Path, threads: int, trace: bool) -> list:
    scale = _parse_gamma(cfg)
    grid = _parse_grid(cfg, scale)
    d = _require(cfg, "d", int, lambda v: v >= 1, "must be >= 1")
    E = _parse_E(cfg, scale)
    F = _parse_F(cfg, d)
    tol = _require(cfg, "tol", float, lambda v: v > 0, "must be > 0")
    n_paths = _require(cfg, "n_paths", int, lambda v: v >= 1, "must be >= 1")
    seed = _seed(cfg)
    cov = _build_cov(cfg, scale, grid)
    report = hit_probability_mc(scale, cov, E, F, d=d, tol=tol, n_paths=n_paths, seed=seed)
    json_path = out_dir / "hit_report.json"
    _write(json_path, _json_payload(report.to_dict()))
    return [json_path]


def cmd_capacity(cfg, out_dir: Path, threads: int, trace: bool) -> list:
    scale = _parse_gamma(cfg)
    beta = _require(cfg, "beta", float)
    E = _parse_E(cfg, scale)
    if isinstance(E, tuple):
        n_atoms = int(cfg.get("n_atoms", 512))
        times = np.linspace(E[0], E[1], n_atoms)
    else:
        times = E.atoms()
    if "F" in cfg:
        d = _require(cfg, "d", int, lambda v: v >= 1, "must be >= 1")
        F = _parse_F(cfg, d)
        f_pts, _ = sample_F_points(F)
        atoms = product_atoms(times[:: max(1, len(times) // 64)], f_pts)
        metric = rho_metric_fn(scale, atoms)
        diam_hint = scale.gamma(min(float(times[-1] - times[0]), scale.x_max))
    else:
        atoms = times
        metric = delta_metric_fn(scale, atoms)
        diam_hint = scale.gamma(min(float(times[-1] - times[0]), scale.x_max))
    resolutions = cfg.get("resolutions")
    if resolutions is None:
        resolutions = [diam_hint / 2.0**j for j in range(1, 7)]
    else:
        if not isinstance(resolutions, list) or not all(
            isinstance(v, (int, float)) and v > 0 for v in resolutions
        ):
            raise ConfigError("resolutions", "must be a list of positive numbers")
    fw_trace = [] if trace else None
    report = capacity_estimate(
        atoms, metric, beta=beta, resolutions=resolutions, trace=fw_trace
    )
    json_path = out_dir / "capacity_report.json"
    outputs = [json_path]
    _write(json_path, _json_payload(report.to_dict()))
    if trace:
        csv_path = out_dir / "capacity_trace.csv"
        lines = ["h,iteration,energy,gap"]
        for h, k, e, g in fw_trace:
            lines.append(f"{float(h)!r},{k},{float(e)!r},{float(g)!r}")
        _write(csv_path, "\n".join(lines) + "\n")
        outputs.append(csv_path)
    return outputs


def cmd_check_scale(cfg, out_dir: Path, threads: int, trace: bool) -> list:
    specs = cfg.get("families")
    if specs is None:
        specs = [_require(cfg, "gamma", str)]
    if not isinstance(specs, list) or not all(isinstance(s, str) for s in specs):
        raise ConfigError("families", "must be a list of scale spec strings")
    eps = float(cfg.get("eps", 0.1))
    rows = []
    traces = ["family,condition,x,ratio"]
    for spec in specs:
        try:
            f = parse_scale_spec(spec)
        except ValueError as err:
            raise ConfigError("families", str(err))
        strong = check_strong_condition(f)
        weak = check_weak_condition(f, eps=eps)
        crit = psi_sqrtlog_criterion(f)
        for verdict in (strong, weak, crit):
            for x, ratio in zip(verdict.x_grid, verdict.ratios):
                traces.append(f"{spec},{verdict.condition},{x!r},{ratio!r}")
        rows.append(
            {
                "family": spec,
                "strong": strong.to_dict(),
                "weak": weak.to_dict(),
                "psi_sqrtlog": crit.to_dict(),
            }
        )
    json_path = out_dir / "check_scale.json"
    csv_path = out_dir / "check_scale.csv"
    _write(json_path, _json_payload({"eps": eps, "rows": rows}))
    lines = ["family,condition,verdict,constant,paper_open"]
    for row in rows:
        for key in ("strong", "weak", "psi_sqrtlog"):
            v = row[key]
            lines.append(
                f"{row['family']},{v['condition']},{v['verdict']},"
                f"{v['fitted_constant']!r},{v['paper_open']}"
            )
    _write(csv_path, "\n".join(lines) + "\n")
    outputs = [json_path, csv_path]
    if trace:
        trace_path = out_dir / "check_scale_traces.csv"
        _write(trace_path, "\n".join(traces) + "\n")
        outputs.append(trace_path)
    return outputs


def cmd_cantor(cfg, out_dir: Path, threads: int, trace: bool) -> list:
    scale = _parse_gamma(cfg)
    zeta = _require(cfg, "zeta", float, lambda v: v > 0, "must be > 0")
    depth = _require(cfg, "depth", int, lambda v: 0 <= v <= 40, "must be in [0, 40]")
    eps0 = float(cfg.get("eps0", 1.0))
    cs = build_cantor(scale, zeta, depth, eps0)
    measure = cantor_measure(cs)
    json_path = out_dir / "cantor_set.json"
    csv_path = out_dir / "cantor_atoms.csv"
    _write(json_path, _json_payload(cs.to_json()))
    out_dir.mkdir(parents=True, exist_ok=True)
    measure.atoms_to_csv(csv_path)
    return [json_path, csv_path]


def cmd_battery(cfg, out_dir: Path, threads: int, trace: bool) -> list:
    scale = _parse_gamma(cfg)
    grid = _parse_grid(cfg, scale)
    d = _require(cfg, "d", int, lambda v: v >= 1, "must be >= 1")
    n_paths = _require(cfg, "n_paths", int, lambda v: v >= 1, "must be >= 1")
    tol = _require(cfg, "tol", float, lambda v: v > 0, "must be > 0")
    seed = _seed(cfg)
    instances = _require(cfg, "instances", list, lambda v: len(v) >= 6, "need >= 6 instances")
    cov = _build_cov(cfg, scale, grid)
    batch = sample_paths(cov, d=d, n_paths=n_paths, seed=seed)
    reports = []
    for i, inst in enumerate(instances):
        if not isinstance(inst, dict):
            raise ConfigError(f"instances[{i}]", "expected an object")
        E = _parse_E(inst, scale)
        F = _parse_F(inst, d)
        reports.append(
            hit_probability_mc(
                scale, cov, E, F, d=d, tol=float(inst.get("tol", tol)),
                n_paths=n_paths, seed=seed, batch=batch,
            )
        )
    verdict = sandwich_report(reports, d=d)
    json_path = out_dir / "battery_verdict.json"
    csv_path = out_dir / "battery_verdict.csv"
    payload = {
        "verdict": verdict,
        "reports": [r.to_dict() for r in reports],
    }
    _write(json_path, _json_payload(payload))
    lines = ["instance,p_hat,ci_low,ci_high,capacity,content,dim_rho,status"]
    for row in verdict["rows"]:
        lines.append(
            f"{row['instance']},{row['p_hat']!r},{row['ci_low']!r},{row['ci_high']!r},"
            f"{row['capacity']!r},{row['content']!r},{row['dim_rho']!r},{row['status']}"
        )
    _write(csv_path, "\n".join(lines) + "\n")
    return [json_path, csv_path]


_COMMANDS = {
    "simulate": cmd_simulate,
    "dims": cmd_dims,
    "hit": cmd_hit,
    "capacity": cmd_capacity,
    "check-scale": cmd_check_scale,
    "cantor": cmd_cantor,
    "battery": cmd_battery,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gpfractal",
        description="Fractal-geometry experiments for Gaussian processes "
        "with a general variance scale.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--threads", type=int, default=1, help="worker cap (never affects results)")
        p.add_argument("--trace", action="store_true", help="emit per-iteration traces")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    t0 = time.time()
    out_dir = Path(args.out)
    try:
        cfg = _load_config(args)
        outputs = _COMMANDS[args.command](cfg, out_dir, max(args.threads, 1), args.trace)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except _NUMERICAL_ERRORS as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERICAL
    _write_manifest(out_dir, args.command.replace("-", "_"), cfg, outputs, t0)
    for p in outputs:
        print(p)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
