"""Command-line interface: plan on a map, replan with a warm start, and
benchmark scenario files.

Exit codes: 0 success, 2 usage, 3 no path, 4 corridor failure,
5 solver not converged (or invariant violation), 6 I/O error.
"""

from __future__ import annotations

import argparse
import pathlib
import statistics
import sys

import numpy as np

from .config import ConfigError, PlannerConfig, load_config
from .corridor import CorridorFailure
from .gridmap import GridFormatError, load_grid
from .hybrid_astar import PlanningError
from .io import (
    ScenarioError,
    ScenarioSpec,
    load_scenario,
    parse_state,
    write_corridor_json,
    write_dense_csv,
    write_knot_csv,
)
from .pipeline import PlanResult, plan_trajectory
from .trajectory import Trajectory, metrics, sample_trajectory

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NO_PATH = 3
EXIT_CORRIDOR = 4
EXIT_NOT_CONVERGED = 5
EXIT_IO = 6

GEAR_SHIFT_SPEED_TOL = 0.05  # |v| allowed at a direction change


class InvariantViolation(RuntimeError):
    pass


def check_trajectory_invariants(result: PlanResult, cfg: PlannerConfig) -> None:
    """Bounds, curvature, safety and gear-shift checks on a solved
    trajectory; raises InvariantViolation with the first failure."""
    traj = result.report.trajectory
    eps = 1e-9
    if np.any(traj.v < cfg.v_min - eps) or np.any(traj.v > cfg.v_max + eps):
        raise InvariantViolation("velocity bound violated")
    if np.any(traj.a < cfg.a_min - eps) or np.any(traj.a > cfg.a_max + eps):
        raise InvariantViolation("acceleration bound violated")
    if np.any(traj.t < cfg.t_min - eps) or np.any(traj.t > cfg.t_max + eps):
        raise InvariantViolation("time-interval bound violated")
    if result.report.max_curvature_violation > 1e-3:
        raise InvariantViolation(
            f"curvature violation {result.report.max_curvature_violation:.3g}")
    if result.report.max_safety_violation > cfg.safety_target:
        raise InvariantViolation(
            f"corridor safety violation {result.report.max_safety_violation:.3g} m")
    sign = np.sign(traj.v)
    for k in range(1, traj.n + 1):
        if sign[k] * sign[k - 1] < 0:
            speed = min(abs(traj.v[k]), abs(traj.v[k - 1]))
            if speed > GEAR_SHIFT_SPEED_TOL:
                raise InvariantViolation(
                    f"gear shift at knot {k} with |v| = {speed:.3g}")


def print_report(result: PlanResult) -> None:
    r = result.report
    print(f"states:             {r.trajectory.n + 1}")
    print(f"duration:           {r.trajectory.duration:.3f} s")
    print(f"objective:          {r.objective:.6f}")
    print(f"iterations:         {r.iterations} ({r.solver_reason})")
    print(f"equality residual:  {r.max_equality_residual:.3e}")
    print(f"safety violation:   {r.max_safety_violation:.3e} m")
    print(f"curvature excess:   {r.max_curvature_violation:.3e}")
    print(f"front end:          {result.front_end_ms:.1f} ms")
    print(f"corridor:           {result.corridor_ms:.1f} ms")
    print(f"optimization:       {result.optimize_ms:.1f} ms")


def write_artifacts(result: PlanResult, cfg: PlannerConfig, out_dir: pathlib.Path,
                    svg: bool) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    dense = sample_trajectory(result.report.trajectory, cfg.sample_dt)
    write_knot_csv(result.report.trajectory, out_dir / "knots.csv")
    write_dense_csv(dense, out_dir / "dense.csv")
    write_corridor_json(result.corridor, out_dir / "corridor.json")
    if svg:
        from .plots import overlay_figure, profile_figure, save_figure

        save_figure(
            overlay_figure(result.inflated_grid, result.corridor,
                           result.resampled_path, dense),
            out_dir / "overlay.svg",
        )
        save_figure(profile_figure(dense, cfg), out_dir / "profile.svg")


def state_at_time(traj: Trajectory, offset: float) -> np.ndarray:
    """Full state [x, y, theta, v] on the trajectory at the given time."""
    knot_t = traj.knot_times()
    i = int(np.searchsorted(knot_t, offset, side="right") - 1)
    i = min(max(i, 0), traj.n - 1)
    tau = offset - knot_t[i]
    ti = traj.t[i]
    jerk = (traj.a[i + 1] - traj.a[i]) / ti
    alpha = (traj.omega[i + 1] - traj.omega[i]) / ti
    v = traj.v[i] + traj.a[i] * tau + 0.5 * jerk * tau**2
    theta = traj.theta[i] + traj.omega[i] * tau + 0.5 * alpha * tau**2
    frac = tau / ti
    x = traj.x[i] + frac * (traj.x[i + 1] - traj.x[i])
    y = traj.y[i] + frac * (traj.y[i + 1] - traj.y[i])
    return np.array([x, y, theta, v])


def cmd_plan(args) -> int:
    cfg = PlannerConfig()
    if args.config:
        cfg = load_config(args.config, cfg)
    start = parse_state(args.start)
    goal = parse_state(args.goal)
    grid = load_grid(args.map)
    result = plan_trajectory(grid, start, goal, cfg)
    if not result.report.converged:
        print(f"solver did not converge: {result.report.solver_reason}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    check_trajectory_invariants(result, cfg)
    write_artifacts(result, cfg, pathlib.Path(args.out_dir), args.svg)
    print_report(result)
    return EXIT_OK


def cmd_replan(args) -> int:
    spec = load_scenario(args.scenario)
    cfg = spec.config()
    grid = load_grid(spec.map_path)
    base = plan_trajectory(grid, spec.start, spec.goal, cfg)
    if not base.report.converged:
        print(f"base solve did not converge: {base.report.solver_reason}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    duration = base.report.trajectory.duration
    if args.offset_sec < 0 or args.offset_sec > duration:
        print(
            f"offset {args.offset_sec:.3f} s outside trajectory duration "
            f"[0, {duration:.3f}] s",
            file=sys.stderr,
        )
        return EXIT_USAGE
    new_start = state_at_time(base.report.trajectory, args.offset_sec)
    warm = plan_trajectory(grid, new_start, spec.goal, cfg, warm_start=base.report)
    cold = plan_trajectory(grid, new_start, spec.goal, cfg)
    wi, ci = warm.report.iterations, cold.report.iterations
    wt, ct = warm.optimize_ms, cold.optimize_ms
    print(f"offset:             {args.offset_sec:.3f} s")
    print(f"cold iterations:    {ci}")
    print(f"warm iterations:    {wi} ({wi / max(ci, 1):.2%} of cold)")
    print(f"cold optimization:  {ct:.1f} ms")
    print(f"warm optimization:  {wt:.1f} ms ({wt / max(ct, 1e-9):.2%} of cold)")
    if not warm.report.converged:
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def _bench_row(name: str, rep: int, result: PlanResult, cfg: PlannerConfig) -> dict:
    dense = sample_trajectory(result.report.trajectory, cfg.sample_dt)
    m = metrics(dense)
    return {
        "scenario": name,
        "rep": rep,
        "converged": int(result.report.converged),
        "front_ms": f"{result.front_end_ms:.3f}",
        "corridor_ms": f"{result.corridor_ms:.3f}",
        "optimize_ms": f"{result.optimize_ms:.3f}",
        "iterations": result.report.iterations,
        "equality_residual": f"{result.report.max_equality_residual:.6e}",
        "safety_violation": f"{result.report.max_safety_violation:.6e}",
        **{k: f"{v:.6f}" for k, v in m.items()},
        "error": "",
    }


BENCH_COLUMNS = [
    "scenario", "rep", "converged", "front_ms", "corridor_ms", "optimize_ms",
    "iterations", "equality_residual", "safety_violation",
    "v_mean", "v_max", "a_mean", "a_max", "jerk_mean", "jerk_max", "error",
]


def cmd_bench(args) -> int:
    import csv as _csv

    rows = []
    failures = 0
    for path in args.scenarios:
        spec = load_scenario(path)
        name = pathlib.Path(path).stem
        cfg = spec.config()
        reps = args.reps if args.reps is not None else spec.reps
        grid = load_grid(spec.map_path)
        for rep in range(reps):
            try:
                result = plan_trajectory(grid, spec.start, spec.goal, cfg)
                rows.append(_bench_row(name, rep, result, cfg))
            except (PlanningError, CorridorFailure) as exc:
                failures += 1
                rows.append({
                    "scenario": name, "rep": rep, "converged": 0,
                    **{c: "" for c in BENCH_COLUMNS[3:]},
                    "error": f"{type(exc).__name__}: {exc}",
                })

    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = _csv.DictWriter(fh, fieldnames=BENCH_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)

    # aggregate text table: per-phase mean and standard deviation
    print(f"{'scenario':<16} {'runs':>4} {'front ms':>18} {'corridor ms':>18} "
          f"{'optimize ms':>18}")
    for name in dict.fromkeys(r["scenario"] for r in rows):
        ok = [r for r in rows if r["scenario"] == name and r["converged"]]
        n = sum(1 for r in rows if r["scenario"] == name)
        if not ok:
            print(f"{name:<16} {n:>4} {'all runs failed':>18}")
            continue
        cells = []
        for col in ("front_ms", "corridor_ms", "optimize_ms"):
            vals = [float(r[col]) for r in ok]
            mean = statistics.fmean(vals)
            std = statistics.stdev(vals) if len(vals) > 1 else 0.0
            cells.append(f"{mean:9.1f} ± {std:6.1f}")
        print(f"{name:<16} {n:>4} {cells[0]:>18} {cells[1]:>18} {cells[2]:>18}")
    if failures:
        print(f"{failures} run(s) failed; see the error column", file=sys.stderr)
    print(f"wrote {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trajplan", description="trajectory planning on occupancy grids")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="plan a trajectory on a map")
    p.add_argument("--map", required=True)
    p.add_argument("--start", required=True, metavar='"x,y,theta,v"')
    p.add_argument("--goal", required=True, metavar='"x,y,theta,v"')
    p.add_argument("--config", default=None)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--svg", action="store_true", help="also render SVG plots")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("replan", help="warm-started replanning experiment")
    p.add_argument("--scenario", required=True)
    p.add_argument("--offset-sec", type=float, required=True)
    p.set_defaults(func=cmd_replan)

    p = sub.add_parser("bench", help="benchmark scenario files")
    p.add_argument("--scenarios", nargs="+", required=True)
    p.add_argument("--reps", type=int, default=None,
                   help="repetitions per scenario (default: scenario file)")
    p.add_argument("--out", required=True, help="raw per-run CSV output")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (OSError, GridFormatError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ConfigError, ScenarioError, ValueError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PlanningError as exc:
        print(f"no path: {exc}", file=sys.stderr)
        return EXIT_NO_PATH
    except CorridorFailure as exc:
        print(f"corridor failure: {exc}", file=sys.stderr)
        return EXIT_CORRIDOR
    except InvariantViolation as exc:
        print(f"trajectory invariant violated: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED


if __name__ == "__main__":
    sys.exit(main())
