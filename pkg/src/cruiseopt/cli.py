"""Command line front end: scenario runs, oracle comparisons, field tools.

Every invocation creates one run directory under the output root (flag
--out, else the CRUISEOPT_OUT environment variable, else ./runs) holding a
report.json plus delimited tables. The report embeds the resolved scenario,
the solver configuration actually used, and any seeds, so a run can be
reproduced from the report alone.

Exit status: 0 on success, 1 when a solver fails to converge, 2 on input
errors (bad flags, unreadable files, invalid scenarios).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .direct import DirectProblem, compare, solve_direct
from .hazards import cluster_ellipses
from .ocp import (DEFAULT_DT_STEPS, SolveConfig, SolverDiagnostic, solve,
                  turnpike_scan)
from .scenario import SCHEMA_VERSION, load_scenario
from .stochastic import SAMPLE_COLUMNS, StudyConfig, run_study
from .windfield import Domain, fit_wind_field, sample_random_field

ENV_OUT = "CRUISEOPT_OUT"


# ------------------------------------------------------------- artifacts


def _jsonable(value):
    """Recursively convert numpy containers so json.dump accepts them."""
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    return value


@dataclass
class RunReport:
    """Self-contained record of one CLI run."""

    command: str
    name: str
    config: dict
    summary: dict
    scenario: dict | None = None
    artifacts: list = field(default_factory=list)
    elapsed_s: float = 0.0
    schema_version: int = SCHEMA_VERSION

    def write(self, run_dir: Path) -> Path:
        # Artifact paths are recorded relative to the run directory and
        # must all exist by the time the report is written.
        for rel in self.artifacts:
            if not (run_dir / rel).exists():
                raise FileNotFoundError(f"artifact {rel} was not written")
        path = run_dir / "report.json"
        doc = _jsonable(dataclasses.asdict(self))
        path.write_text(json.dumps(doc, indent=2) + "\n")
        return path


def _run_dir(args, command: str, name: str) -> Path:
    root = Path(args.out or os.environ.get(ENV_OUT) or "runs")
    safe = "".join(c if c.isalnum() or c in "-_." else "-" for c in name)
    path = root / f"{command}-{safe}"
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_table(path: Path, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v
                             for v in row])


def _read_columns(path: str, n_columns: int) -> np.ndarray:
    """Load a delimited numeric table, tolerating one header row."""
    try:
        data = np.loadtxt(path, delimiter=",", ndmin=2)
    except ValueError:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] != n_columns:
        raise ValueError(f"{path}: expected {n_columns} columns, "
                         f"found {data.shape[1]}")
    return data


def _finish(report: RunReport, run_dir: Path, start: float,
            status: int = 0) -> int:
    report.elapsed_s = time.perf_counter() - start
    path = report.write(run_dir)
    for rel in report.artifacts:
        print(run_dir / rel)
    print(path)
    return status


# -------------------------------------------------------------- commands


def _solve_config(args) -> SolveConfig:
    return SolveConfig(dt_steps=args.dt_steps,
                       max_iterations=args.max_iterations,
                       tolerance=args.tolerance,
                       time_cap=args.time_cap)


def _cmd_solve(args) -> int:
    start = time.perf_counter()
    scenario = load_scenario(args.scenario)
    config = _solve_config(args)
    solution = solve(scenario, config)
    run_dir = _run_dir(args, "solve", scenario.name or "scenario")
    trajectory = solution.trajectory
    if args.max_nodes:
        trajectory = trajectory.downsample(args.max_nodes)
    trajectory.write_csv(run_dir / "trajectory.csv")
    _write_table(run_dir / "residuals.csv", ("iteration", "residual_norm"),
                 enumerate(solution.residual_history))
    summary = solution.summary()
    summary["final_mass_kg"] = solution.final_mass
    summary["params"] = list(solution.params)
    report = RunReport(command="solve", name=scenario.name,
                       scenario=scenario.to_dict(),
                       config=dataclasses.asdict(config), summary=summary,
                       artifacts=["trajectory.csv", "residuals.csv"])
    print(f"solve {scenario.name}: J={solution.objective:.6g} "
          f"tf={solution.final_time:.1f}s converged={solution.converged}")
    return _finish(report, run_dir, start,
                   status=0 if solution.converged else 1)


def _cmd_direct(args) -> int:
    start = time.perf_counter()
    scenario = load_scenario(args.scenario)
    problem = DirectProblem(scenario=scenario, nodes=args.nodes)
    solution = solve_direct(problem)
    run_dir = _run_dir(args, "direct", scenario.name or "scenario")
    solution.trajectory.write_csv(run_dir / "trajectory.csv")
    _write_table(run_dir / "violations.csv",
                 ("outer_iteration", "max_violation"),
                 enumerate(solution.violation_history))
    config = {f.name: getattr(problem, f.name)
              for f in dataclasses.fields(problem) if f.name != "scenario"}
    report = RunReport(command="direct", name=scenario.name,
                       scenario=scenario.to_dict(), config=config,
                       summary=solution.summary(),
                       artifacts=["trajectory.csv", "violations.csv"])
    print(f"direct {scenario.name}: J={solution.objective:.6g} "
          f"tf={solution.final_time:.1f}s converged={solution.converged}")
    return _finish(report, run_dir, start,
                   status=0 if solution.converged else 1)


def _cmd_compare(args) -> int:
    start = time.perf_counter()
    scenario = load_scenario(args.scenario)
    config = _solve_config(args)
    surrogate = solve(scenario, config)
    direct = solve_direct(DirectProblem(scenario=scenario, nodes=args.nodes))
    report_doc = compare(surrogate, direct)
    run_dir = _run_dir(args, "compare", scenario.name or "scenario")
    surrogate.trajectory.write_csv(run_dir / "surrogate.csv")
    direct.trajectory.write_csv(run_dir / "direct.csv")
    summary = report_doc.to_dict()
    summary["surrogate"] = surrogate.summary()
    summary["direct"] = direct.summary()
    report = RunReport(command="compare", name=scenario.name,
                       scenario=scenario.to_dict(),
                       config={"solver": dataclasses.asdict(config),
                               "nodes": args.nodes},
                       summary=summary,
                       artifacts=["surrogate.csv", "direct.csv"])
    ok = surrogate.converged and direct.converged
    print(f"compare {scenario.name}: relative objective error "
          f"{report_doc.relative_objective_error:.3e}, time ratio "
          f"{report_doc.time_ratio:.3f}")
    return _finish(report, run_dir, start, status=0 if ok else 1)


def _cmd_cluster(args) -> int:
    start = time.perf_counter()
    points = _read_columns(args.points, 2)
    hazards = cluster_ellipses(points, args.k, seed=args.seed,
                               weight=args.weight)
    run_dir = _run_dir(args, "cluster", Path(args.points).stem)
    rows = [(h.center[0], h.center[1], h.semi_axes[0], h.semi_axes[1],
             h.orientation, h.weight) for h in hazards]
    _write_table(run_dir / "ellipses.csv",
                 ("xc_m", "yc_m", "a_m", "b_m", "orientation_rad", "weight"),
                 rows)
    coverage = max(min(h.norm(x, y) for h in hazards) for x, y in points)
    report = RunReport(command="cluster", name=Path(args.points).stem,
                       config={"k": args.k, "seed": args.seed,
                               "weight": args.weight, "points": args.points},
                       summary={"n_points": int(points.shape[0]),
                                "k": args.k,
                                "max_covering_norm": coverage,
                                "ellipses": [h.to_dict() for h in hazards]},
                       artifacts=["ellipses.csv"])
    print(f"cluster: {points.shape[0]} points -> {args.k} ellipses, "
          f"max covering norm {coverage:.6f}")
    return _finish(report, run_dir, start)


def _cmd_wind_fit(args) -> int:
    start = time.perf_counter()
    samples = _read_columns(args.samples, 4)
    result = fit_wind_field(samples,
                            (args.vortices, args.dipoles, args.source_sinks),
                            seed=args.seed, n_starts=args.starts)
    run_dir = _run_dir(args, "wind-fit", Path(args.samples).stem)
    (run_dir / "field.json").write_text(
        json.dumps(_jsonable(result.field.to_dicts()), indent=2) + "\n")
    report = RunReport(command="wind-fit", name=Path(args.samples).stem,
                       config={"samples": args.samples, "seed": args.seed,
                               "n_starts": args.starts,
                               "counts": [args.vortices, args.dipoles,
                                          args.source_sinks]},
                       summary={"rms_residual_mps": result.rms_residual,
                                "cost": result.cost,
                                "converged": result.converged,
                                "message": result.message},
                       artifacts=["field.json"])
    print(f"wind-fit: rms residual {result.rms_residual:.4f} m/s over "
          f"{samples.shape[0]} samples, converged={result.converged}")
    return _finish(report, run_dir, start,
                   status=0 if result.converged else 1)


def _cmd_wind_sample(args) -> int:
    start = time.perf_counter()
    domain = Domain(0.0, args.side, 0.0, args.side)
    field_obj = sample_random_field(
        args.seed, args.max_speed,
        (args.vortices, args.dipoles, args.source_sinks), domain)
    run_dir = _run_dir(args, "wind-sample", f"seed{args.seed}")
    (run_dir / "field.json").write_text(
        json.dumps(_jsonable(field_obj.to_dicts()), indent=2) + "\n")
    X, Y = domain.grid(args.grid)
    wx, wy = field_obj.wind_grid(X, Y)
    rows = zip(X.ravel(), Y.ravel(), wx.ravel(), wy.ravel())
    _write_table(run_dir / "wind.csv", ("x_m", "y_m", "wx_mps", "wy_mps"),
                 rows)
    peak = float(np.hypot(wx, wy).max())
    report = RunReport(command="wind-sample", name=f"seed{args.seed}",
                       config={"seed": args.seed,
                               "max_speed_mps": args.max_speed,
                               "side_m": args.side, "grid": args.grid,
                               "counts": [args.vortices, args.dipoles,
                                          args.source_sinks]},
                       summary={"n_primitives": len(field_obj.primitives),
                                "grid_peak_speed_mps": peak},
                       artifacts=["field.json", "wind.csv"])
    print(f"wind-sample: seed {args.seed}, grid peak speed {peak:.2f} m/s")
    return _finish(report, run_dir, start)


def _cmd_turnpike(args) -> int:
    start = time.perf_counter()
    scenario = load_scenario(args.scenario)
    pis = np.linspace(args.pi_lo, args.pi_hi, args.pi_count)
    mtow = scenario.aircraft.mtow
    masses = np.linspace(args.m_lo_frac, args.m_hi_frac, args.m_count) * mtow
    scan = turnpike_scan(pis, masses, scenario)
    if not scan.valid.any():
        print("turnpike: no throttle/mass cell admits a cruise equilibrium",
              file=sys.stderr)
        return 1
    run_dir = _run_dir(args, "turnpike", scenario.name or "scenario")
    rows = []
    for a, pi in enumerate(pis):
        for b, m in enumerate(masses):
            rows.append((pi, m, scan.v_star[a, b], scan.rate[a, b],
                         bool(scan.valid[a, b])))
    _write_table(run_dir / "rates.csv",
                 ("throttle", "mass_kg", "v_star_mps", "rate_per_s", "valid"),
                 rows)
    report = RunReport(
        command="turnpike", name=scenario.name,
        scenario=scenario.to_dict(),
        config={"pi_lo": args.pi_lo, "pi_hi": args.pi_hi,
                "pi_count": args.pi_count, "m_lo_frac": args.m_lo_frac,
                "m_hi_frac": args.m_hi_frac, "m_count": args.m_count},
        summary={"rate_min_per_s": scan.rate_min,
                 "rate_max_per_s": scan.rate_max,
                 "valid_cells": int(scan.valid.sum()),
                 "total_cells": int(scan.valid.size),
                 "all_contracting": bool(scan.rate_max < 0.0)},
        artifacts=["rates.csv"])
    print(f"turnpike {scenario.name}: rates in [{scan.rate_min:.3e}, "
          f"{scan.rate_max:.3e}] 1/s over {int(scan.valid.sum())} cells")
    return _finish(report, run_dir, start)


def _cmd_mc(args) -> int:
    start = time.perf_counter()
    config = StudyConfig(trials=args.trials, seed=args.seed,
                         wind_index=args.p, side=args.side, v0=args.v0,
                         grid_points=args.grid,
                         histogram_bins=args.bins,
                         integration_steps=args.steps)
    result = run_study(config)
    run_dir = _run_dir(args, "mc", f"p{args.p:g}-n{args.trials}")
    _write_table(run_dir / "samples.csv", SAMPLE_COLUMNS,
                 result.sample_rows())
    _write_table(run_dir / "pdf_average.csv",
                 ("source", "ratio", "density"),
                 result.ratio_to_average.rows())
    _write_table(run_dir / "pdf_band.csv", ("source", "ratio", "density"),
                 result.ratio_to_band.rows())
    summary = result.summary()
    summary["excluded_trials"] = [(e.index, e.reason) for e in result.excluded]
    report = RunReport(command="mc", name=f"p{args.p:g}-n{args.trials}",
                       config=dataclasses.asdict(config), summary=summary,
                       artifacts=["samples.csv", "pdf_average.csv",
                                  "pdf_band.csv"])
    print(f"mc: p={args.p:g}, {len(result.records)}/{args.trials} trials, "
          f"ratio std {result.ratio_to_average.std:.2e} (domain) / "
          f"{result.ratio_to_band.std:.2e} (band)")
    return _finish(report, run_dir, start)


# -------------------------------------------------------------- dispatch


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dt-steps", type=int, default=DEFAULT_DT_STEPS,
                   help="integration steps per trajectory")
    p.add_argument("--max-iterations", type=int, default=200)
    p.add_argument("--tolerance", type=float, default=1e-6)
    p.add_argument("--time-cap", type=float, default=None,
                   help="wall seconds before the solver returns its best iterate")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cruiseopt",
        description="Cruise trajectory optimization over analytic wind fields")
    parser.add_argument("--out", default=None,
                        help=f"output root (default ${ENV_OUT} or ./runs)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="indirect shooting solve of a scenario")
    p.add_argument("--scenario", required=True,
                   help="scenario file or builtin name")
    _add_solver_flags(p)
    p.add_argument("--max-nodes", type=int, default=None,
                   help="downsample the trajectory table to this many nodes")
    p.set_defaults(handler=_cmd_solve)

    p = sub.add_parser("direct", help="direct transcription oracle solve")
    p.add_argument("--scenario", required=True)
    p.add_argument("--nodes", type=int, default=300)
    p.set_defaults(handler=_cmd_direct)

    p = sub.add_parser("compare",
                       help="solve both ways and report the gap")
    p.add_argument("--scenario", required=True)
    _add_solver_flags(p)
    p.add_argument("--nodes", type=int, default=300)
    p.set_defaults(handler=_cmd_compare)

    p = sub.add_parser("cluster", help="cover scattered points with ellipses")
    p.add_argument("--points", required=True,
                   help="delimited file with x,y columns")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--weight", type=float, default=1.0)
    p.set_defaults(handler=_cmd_cluster)

    p = sub.add_parser("wind-fit",
                       help="calibrate a composite field to samples")
    p.add_argument("--samples", required=True,
                   help="delimited file with x,y,wx,wy columns")
    p.add_argument("--vortices", type=int, default=2)
    p.add_argument("--dipoles", type=int, default=0)
    p.add_argument("--source-sinks", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--starts", type=int, default=8)
    p.set_defaults(handler=_cmd_wind_fit)

    p = sub.add_parser("wind-sample", help="draw a seeded random wind field")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-speed", type=float, default=20.0)
    p.add_argument("--vortices", type=int, default=3)
    p.add_argument("--dipoles", type=int, default=1)
    p.add_argument("--source-sinks", type=int, default=2)
    p.add_argument("--side", type=float, default=1.0e6)
    p.add_argument("--grid", type=int, default=25)
    p.set_defaults(handler=_cmd_wind_sample)

    p = sub.add_parser("turnpike",
                       help="cruise speed recovery rates over throttle and mass")
    p.add_argument("--scenario", required=True)
    p.add_argument("--pi-lo", type=float, default=0.3)
    p.add_argument("--pi-hi", type=float, default=1.0)
    p.add_argument("--pi-count", type=int, default=8)
    p.add_argument("--m-lo-frac", type=float, default=0.55)
    p.add_argument("--m-hi-frac", type=float, default=1.0)
    p.add_argument("--m-count", type=int, default=8)
    p.set_defaults(handler=_cmd_turnpike)

    p = sub.add_parser("mc", help="Monte Carlo wind variability study")
    p.add_argument("--p", type=float, required=True,
                   help="peak wind speed as a fraction of the airspeed")
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--side", type=float, default=1.0e6)
    p.add_argument("--v0", type=float, default=240.0)
    p.add_argument("--grid", type=int, default=200)
    p.add_argument("--steps", type=int, default=300)
    p.add_argument("--bins", type=int, default=None)
    p.set_defaults(handler=_cmd_mc)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except (FileNotFoundError, ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except SolverDiagnostic as err:
        print(f"solver failure: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
