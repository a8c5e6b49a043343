"""End-to-end planning: inflate map, search coarse path, build corridor,
optimize, with per-phase wall-clock timing."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .config import PlannerConfig
from .corridor import Corridor, build_corridor
from .gridmap import OccupancyGrid
from .hybrid_astar import (
    FORWARD,
    REVERSE,
    CoarsePath,
    Pose,
    plan_path,
    resample_path,
    snap_path_to_free,
)
from .optimizer import ProblemSpec, SolveReport, naive_time_parameterization, solve
from .trajectory import Trajectory


@dataclass
class PlanResult:
    report: SolveReport
    coarse_path: CoarsePath
    resampled_path: CoarsePath
    corridor: Corridor
    inflated_grid: OccupancyGrid
    problem: ProblemSpec
    front_end_ms: float
    corridor_ms: float
    optimize_ms: float


def state_pose(state) -> Pose:
    x, y, theta, v = state
    return Pose(float(x), float(y), float(theta), REVERSE if v < 0 else FORWARD)


def plan_trajectory(
    grid: OccupancyGrid,
    start,
    goal,
    cfg: PlannerConfig | None = None,
    warm_start: Trajectory | SolveReport | None = None,
) -> PlanResult:
    """Plan from start state [x, y, theta, v] to goal state on the given grid."""
    cfg = cfg or PlannerConfig()
    start = np.asarray(start, dtype=float)
    goal = np.asarray(goal, dtype=float)

    t0 = time.perf_counter()
    inflated = grid.inflate(cfg.disc_radius)
    coarse = plan_path(inflated, state_pose(start), state_pose(goal), cfg.search_params())
    resampled = snap_path_to_free(inflated, resample_path(coarse, cfg.resample_spacing))
    if len(resampled.poses) < 2:
        # degenerate start-at-goal query; keep one (near-)zero-length interval
        p = resampled.poses[0]
        resampled = CoarsePath([p, p], np.zeros(2))
    t1 = time.perf_counter()
    corridor = build_corridor(inflated, resampled, cfg.corridor_max_size)
    t2 = time.perf_counter()
    problem = ProblemSpec(start, goal, corridor, cfg, resampled)
    if warm_start is None:
        # trapezoid profile along the coarse path: a noticeably better cold
        # seed than the constant half-cruise guess
        warm_start = naive_time_parameterization(resampled, cfg)
    report = solve(problem, warm_start)
    t3 = time.perf_counter()
    return PlanResult(
        report=report,
        coarse_path=coarse,
        resampled_path=resampled,
        corridor=corridor,
        inflated_grid=inflated,
        problem=problem,
        front_end_ms=(t1 - t0) * 1e3,
        corridor_ms=(t2 - t1) * 1e3,
        optimize_ms=(t3 - t2) * 1e3,
    )
