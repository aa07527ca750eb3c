"""Command-line front end.

    fasttrack solve-single   --config run.toml
    fasttrack solve-priority --config run.toml --out results/
    fasttrack sweep | verify | simulate | emit-figure ...

Exit codes: 0 success, 1 verification failure, 2 configuration error,
3 numerical infeasibility. Floats are written with 9 significant digits.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import equilibrium
from .config import SHIPPED_DIR, RunConfig, load_config
from .equilibrium import (
    ThresholdStatus,
    inverse_square_boundary,
    manifold_sweep,
    priority_boundary,
    priority_masses,
    solve_priority,
    solve_single_queue,
)
from .errors import ConfigError, DomainError, FastTrackError, NumericalError
from .oracle import empirical_band_violations, sample_population, simulate_regime
from .welfare import region_geometry, verify_income_bands

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

DEFAULT_CONFIG = SHIPPED_DIR / "default.toml"
MAX_LISTED_VIOLATIONS = 100

# indirection so tests can corrupt thresholds (negative control for verify)
compute_thresholds = equilibrium.thresholds


def fmt(x) -> str:
    return f"{x:.9g}"


def _rounded(obj):
    if isinstance(obj, float):
        return float(fmt(obj))
    if isinstance(obj, dict):
        return {k: _rounded(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_rounded(v) for v in obj]
    return obj


def _dump(record: dict) -> str:
    return json.dumps(_rounded(record), sort_keys=True, indent=2) + "\n"


def _write(out: Path, name: str, text: str):
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text, encoding="utf-8")


def _write_csv(out: Path, name: str, header, rows):
    out.mkdir(parents=True, exist_ok=True)
    with open(out / name, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(x) if isinstance(x, float) else x for x in row])


def _solved_system(cfg: RunConfig, dist, v, tol):
    if not cfg.priority:
        raise ConfigError("[priority] section with two fixed coordinates is required")
    return solve_priority(dist, v, cfg.rho, cfg.priority, ftol=tol)


def cmd_solve_single(cfg: RunConfig, out: Path, tol: float) -> int:
    eq = solve_single_queue(cfg.dist(), cfg.rho)
    record = {"rho": eq.rho, "c": eq.c, "residual": eq.residual, "iterations": eq.iterations}
    text = _dump(record)
    _write(out, "solve_single.json", text)
    sys.stdout.write(text)
    return EXIT_OK


def _threshold_record(th):
    return th.as_dict() if th is not None else None


def cmd_solve_priority(cfg: RunConfig, out: Path, tol: float) -> int:
    dist, v = cfg.dist(), cfg.value_fn()
    c = solve_single_queue(dist, cfg.rho).c
    system = _solved_system(cfg, dist, v, tol)
    split = priority_masses(dist, v, system)
    th = compute_thresholds(v, system, c)
    record = {
        "rho": cfg.rho,
        "single_c": c,
        "system": system.as_dict(),
        "solved": next(k for k in ("c1", "c2", "p") if k not in cfg.priority),
        "paid_mass": split.paid,
        "free_mass": split.free,
        "residual": abs(split.total - cfg.rho),
        "y_lower": _threshold_record(th.y_lower),
        "y_upper": _threshold_record(th.y_upper),
    }
    text = _dump(record)
    _write(out, "solve_priority.json", text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_sweep(cfg: RunConfig, out: Path, tol: float) -> int:
    if not cfg.sweep_pairs:
        raise ConfigError("[sweep] grid is empty")
    dist, v = cfg.dist(), cfg.value_fn()
    points = manifold_sweep(dist, v, cfg.rho, cfg.sweep_pairs, ftol=tol)
    rows = []
    for pt in points:
        if pt.feasible:
            th = pt.thresholds
            rows.append([pt.c2, pt.p, "solved", pt.system.c1, pt.paid_mass, pt.free_mass, pt.residual,
                         th.y_lower.value, th.y_upper.value if th.y_upper else "", ""])
        else:
            rows.append([pt.c2, pt.p, "infeasible", "", "", "", "", "", "", pt.error])
    header = ["c2", "p", "status", "c1", "paid_mass", "free_mass", "residual", "y_lower", "y_upper", "message"]
    _write_csv(out, "sweep.csv", header, rows)
    n_ok = sum(pt.feasible for pt in points)
    print(f"sweep: {n_ok}/{len(points)} grid points solved -> {out / 'sweep.csv'}")
    return EXIT_OK


def cmd_verify(cfg: RunConfig, out: Path, tol: float) -> int:
    dist, v, params = cfg.dist(), cfg.value_fn(), cfg.params()
    c = solve_single_queue(dist, cfg.rho).c
    system = _solved_system(cfg, dist, v, tol)
    th = compute_thresholds(v, system, c)
    report = verify_income_bands(v, params, c, system, cfg.grid_n, thresholds=th)
    pop = sample_population(dist, cfg.mc_n, cfg.seed)
    mc_violations = empirical_band_violations(pop, v, params, c, system, th)

    _write_csv(out, "report.csv", ["band", "gain_count", "loss_count", "indiff_count"], report.rows())
    record = {
        "rho": cfg.rho,
        "single_c": c,
        "system": system.as_dict(),
        "y_lower": _threshold_record(th.y_lower),
        "y_upper": _threshold_record(th.y_upper),
        "grid_n": cfg.grid_n,
        "grid_violation_count": len(report.violations),
        "grid_violations": [x.as_dict() for x in report.violations[:MAX_LISTED_VIOLATIONS]],
        "middle_paid_losers": report.middle_paid_losers,
        "mc_n": cfg.mc_n,
        "seed": cfg.seed,
        "mc_violation_count": len(mc_violations),
        "mc_violations": [x.as_dict() for x in mc_violations[:MAX_LISTED_VIOLATIONS]],
        "notice": report.notice,
    }
    _write(out, "report.json", _dump(record))
    passed = report.passed and not mc_violations
    print(
        f"verify: grid {len(report.violations)} violations, Monte Carlo {len(mc_violations)} violations "
        f"-> {'PASS' if passed else 'FAIL'}"
    )
    return EXIT_OK if passed else EXIT_VIOLATION


def cmd_simulate(cfg: RunConfig, out: Path, tol: float) -> int:
    dist, v, params = cfg.dist(), cfg.value_fn(), cfg.params()
    pop = sample_population(dist, cfg.sim_n, cfg.sim_seed)
    record = {"n": cfg.sim_n, "seed": cfg.sim_seed, "distribution": dist.descriptor()}
    if cfg.sim_regime in ("single", "both"):
        c = solve_single_queue(dist, cfg.rho).c
        record["single"] = {"c": c, **simulate_regime(pop, v, params, c).as_dict()}
    if cfg.sim_regime in ("priority", "both"):
        system = _solved_system(cfg, dist, v, tol)
        record["priority"] = {"system": system.as_dict(), **simulate_regime(pop, v, params, system).as_dict()}
    text = _dump(record)
    _write(out, "simulation.json", text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_emit_figure(cfg: RunConfig, out: Path, tol: float) -> int:
    fig = cfg.figure
    resolution = fig.get("resolution", 200)
    if fig.get("fixture") == "inverse-square":
        boundary = inverse_square_boundary(fig.get("scale", 0.35))
        c, c1 = fig.get("c", 0.65), fig.get("c1", 0.8)
    else:
        dist, v = cfg.dist(), cfg.value_fn()
        c = solve_single_queue(dist, cfg.rho).c
        system = _solved_system(cfg, dist, v, tol)
        boundary, c1 = priority_boundary(v, system), system.c1
    if equilibrium.boundary_crossing(boundary, 1.0).status is ThresholdStatus.AT_UPPER:
        raise NumericalError("degenerate geometry: the fast-track boundary lies above theta = 1")
    geo = region_geometry(boundary, c1, c, resolution)
    rows = [(cid, float(y), float(t)) for cid, (ys, ts) in geo.curves.items() for y, t in zip(ys, ts)]
    _write_csv(out, "boundaries.csv", ["curve_id", "y", "theta"], rows)
    _write_csv(out, "points.csv", ["label", "theta", "y"],
               [(label, float(t), float(y)) for label, (t, y) in geo.points.items()])
    for notice in geo.notices:
        print(f"notice: {notice}", file=sys.stderr)
    print(f"emit-figure: {len(rows)} boundary rows, {len(geo.points)} points -> {out}")
    return EXIT_OK


COMMANDS = {
    "solve-single": cmd_solve_single,
    "solve-priority": cmd_solve_priority,
    "sweep": cmd_sweep,
    "verify": cmd_verify,
    "simulate": cmd_simulate,
    "emit-figure": cmd_emit_figure,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="TOML run configuration (default: shipped default.toml)")
    common.add_argument("--seed", type=int, help="override the verify and simulate seeds")
    common.add_argument("--out", type=Path, help="output directory (default: output.dir or ./out)")
    common.add_argument("--tol", type=float, help="clearing residual tolerance (default 1e-8)")
    parser = argparse.ArgumentParser(prog="fasttrack", description=__doc__.split("\n\n")[0], parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        cfg = load_config(args.config or DEFAULT_CONFIG)
        if args.seed is not None:
            if args.seed < 0 or args.seed >= 2**64:
                raise ConfigError(f"--seed must be a u64, got {args.seed}")
            cfg.seed = cfg.sim_seed = args.seed
        tol = equilibrium.FTOL if args.tol is None else args.tol
        if not tol > 0:
            raise ConfigError(f"--tol must be positive, got {tol}")
        out = args.out or Path(cfg.out_dir or "out")
        return COMMANDS[args.command](cfg, out, tol)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FastTrackError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
