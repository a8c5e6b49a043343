"""Problem assembly and the penalty solve: initial guess, warm starting,
bound-constrained minimization, and recomputed feasibility residuals."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .config import PlannerConfig
from .corridor import Corridor
from .hybrid_astar import CoarsePath, wrap_angle
from .lbfgsb import BoxProblem, SolverOptions, minimize
from .objective import PenaltyObjective, _equality_terms, pack, packed_bounds, unpack
from .trajectory import Trajectory


@dataclass
class ProblemSpec:
    start: np.ndarray  # [x, y, theta, v]
    goal: np.ndarray
    corridor: Corridor
    config: PlannerConfig
    initial_path: CoarsePath

    def __post_init__(self):
        self.start = np.asarray(self.start, dtype=float)
        self.goal = np.asarray(self.goal, dtype=float)
        if self.corridor.n_states != len(self.initial_path.poses):
            raise ValueError(
                f"corridor covers {self.corridor.n_states} states but path has "
                f"{len(self.initial_path.poses)} poses"
            )


@dataclass
class SolveReport:
    trajectory: Trajectory
    objective: float
    max_equality_residual: float
    max_safety_violation: float
    max_curvature_violation: float
    iterations: int
    evaluations: int
    wall_time_ms: float
    converged: bool
    solver_reason: str


def initial_guess(path: CoarsePath, cfg: PlannerConfig) -> Trajectory:
    """Seed trajectory from a (resampled) coarse path: half-cruise speed
    signed by direction, zero speed at endpoints and gear switches, zero
    acceleration, heading-rate estimate for omega."""
    poses = path.poses
    if len(poses) < 2:
        raise ValueError("need at least two poses for an initial guess")
    n1 = len(poses)
    x = np.array([p.x for p in poses])
    y = np.array([p.y for p in poses])
    theta = np.array([p.theta for p in poses])
    cruise = 0.5 * cfg.v_max
    v = np.array([p.direction * cruise for p in poses])
    v[0] = v[-1] = 0.0
    for i in path.switch_indices():
        v[i] = 0.0
    seg = np.hypot(np.diff(x), np.diff(y))
    t = np.maximum(seg / cruise, cfg.t_min)
    omega = np.zeros(n1)
    dth = np.array([wrap_angle(theta[i + 1] - theta[i]) for i in range(n1 - 1)])
    omega[:-1] = dth / t
    a = np.zeros(n1)
    return Trajectory(x, y, theta, v, a, omega, t)


def resample_warm_start(traj: Trajectory, n_new: int, cfg: PlannerConfig) -> Trajectory:
    """Map a previous solution onto a different state count: linear
    interpolation of all six channels along cumulative arc length, time
    intervals rescaled proportionally."""
    s = np.concatenate([[0.0], np.cumsum(np.hypot(np.diff(traj.x), np.diff(traj.y)))])
    if s[-1] <= 0:
        s = np.arange(s.size, dtype=float)  # degenerate: fall back to index spacing
    target = np.linspace(0.0, s[-1], n_new + 1)
    theta_unwrapped = np.unwrap(traj.theta)
    knot_t = traj.knot_times()
    x = np.interp(target, s, traj.x)
    y = np.interp(target, s, traj.y)
    theta = np.interp(target, s, theta_unwrapped)
    v = np.interp(target, s, traj.v)
    a = np.interp(target, s, traj.a)
    omega = np.interp(target, s, traj.omega)
    t = np.clip(np.diff(np.interp(target, s, knot_t)), cfg.t_min, cfg.t_max)
    return Trajectory(x, y, theta, v, a, omega, t)


def transfer_warm_start(traj: Trajectory, path: CoarsePath, cfg: PlannerConfig) -> Trajectory:
    """Re-seed a previous solution onto a different coarse path.

    Positions and headings come from the new path (whose points seeded the
    corridor, so they start inside their polygons); the speed, acceleration,
    turn-rate and timing profile is carried over from the old solution by
    matching arc-length fractions.  Interpolating the old positions directly
    would misalign states with the new polygon assignment by up to a whole
    polygon near a moved start.
    """
    poses = path.poses
    x = np.array([p.x for p in poses])
    y = np.array([p.y for p in poses])
    theta = np.array([p.theta for p in poses])

    s_old = np.concatenate([[0.0], np.cumsum(np.hypot(np.diff(traj.x), np.diff(traj.y)))])
    s_new = np.concatenate([[0.0], np.cumsum(np.hypot(np.diff(x), np.diff(y)))])
    f_old = s_old / s_old[-1] if s_old[-1] > 0 else np.linspace(0.0, 1.0, s_old.size)
    f_new = s_new / s_new[-1] if s_new[-1] > 0 else np.linspace(0.0, 1.0, s_new.size)

    v = np.interp(f_new, f_old, traj.v)
    a = np.interp(f_new, f_old, traj.a)
    omega = np.interp(f_new, f_old, traj.omega)
    t = np.clip(np.diff(np.interp(f_new, f_old, traj.knot_times())), cfg.t_min, cfg.t_max)
    return Trajectory(x, y, theta, v, a, omega, t)


def project_into_corridor(traj: Trajectory, corridor: Corridor, cfg: PlannerConfig) -> Trajectory:
    """Clamp each state's position so both disc points sit strictly inside
    every rectangle the state is assigned to (shrunk by the safety margin).

    Seeds built from path points satisfy the rear-disc constraints but can
    leave the front disc outside a polygon, most visibly at junction states
    that belong to two rectangles at once; the near-flat penalty is then slow
    to pull them back in.  Positions move only as far as needed, and axes
    whose feasible interval is empty (heading across a too-narrow overlap)
    are left alone.
    """
    x = traj.x.copy()
    y = traj.y.copy()
    theta = traj.theta.copy()
    shrink = cfg.safety_margin
    off = cfg.disc_offset
    polys_of = [[] for _ in range(traj.n + 1)]
    for i, states in enumerate(corridor.assignment):
        for j in states:
            polys_of[j].append(corridor.polygons[i])
        if i + 1 < len(corridor.polygons):
            polys_of[states[-1]].append(corridor.polygons[i + 1])
    for k in range(traj.n + 1):
        # both discs lie in every assigned rectangle iff both lie in the
        # rectangles' intersection box
        x0 = max(-p.b[1] for p in polys_of[k]) + shrink
        x1 = min(p.b[0] for p in polys_of[k]) - shrink
        y0 = max(-p.b[3] for p in polys_of[k]) + shrink
        y1 = min(p.b[2] for p in polys_of[k]) - shrink
        if x1 <= x0 or y1 <= y0:
            continue  # degenerate overlap; leave the state to the penalty
        # the rear-to-front offset vector must fit inside the box; if the
        # heading points across a too-narrow dimension, rotate it minimally
        c, s = np.cos(theta[k]), np.sin(theta[k])
        cmax = (x1 - x0) / off
        smax = (y1 - y0) / off
        if cmax < 1.0 and abs(c) > cmax:
            c = np.sign(c) * cmax
            s = np.sign(s if s != 0 else 1.0) * np.sqrt(1.0 - c * c)
        elif smax < 1.0 and abs(s) > smax:
            s = np.sign(s) * smax
            c = np.sign(c if c != 0 else 1.0) * np.sqrt(1.0 - s * s)
        if abs(c) > cmax or abs(s) > smax:
            continue  # box smaller than the body in both dimensions
        theta[k] = np.arctan2(s, c)
        dx, dy = off * c, off * s
        x[k] = min(max(x[k], x0 - min(dx, 0.0)), x1 - max(dx, 0.0))
        y[k] = min(max(y[k], y0 - min(dy, 0.0)), y1 - max(dy, 0.0))
    return Trajectory(x, y, theta, traj.v.copy(),
                      traj.a.copy(), traj.omega.copy(), traj.t.copy())


def equality_residual_max(traj: Trajectory, start, goal) -> float:
    """Largest absolute component over transition and endpoint residuals."""
    _, (ex, ey, ev, es, ec, _, e0, en) = _equality_terms(
        traj, np.asarray(start, float), np.asarray(goal, float))
    return float(max(np.max(np.abs(arr), initial=0.0) for arr in (ex, ey, ev, es, ec, e0, en)))


def safety_violation_max(traj: Trajectory, corridor: Corridor, cfg: PlannerConfig) -> float:
    """Largest half-space violation (meters) over both disc points of every
    state against its assigned polygon, junction rows included."""
    worst = 0.0
    for i, states in enumerate(corridor.assignment):
        checks = [(corridor.polygons[i], states)]
        if i + 1 < len(corridor.polygons):
            checks.append((corridor.polygons[i + 1], states[-1:]))
        for poly, sel in checks:
            for j in sel:
                bx, by = traj.x[j], traj.y[j]
                fx = bx + cfg.disc_offset * np.cos(traj.theta[j])
                fy = by + cfg.disc_offset * np.sin(traj.theta[j])
                worst = max(worst, poly.violation((bx, by)), poly.violation((fx, fy)))
    return max(worst, 0.0)


def curvature_violation_max(traj: Trajectory, cfg: PlannerConfig, v_floor: float = 0.1) -> float:
    """Largest |omega|/|v| - kappa_max over states moving faster than v_floor."""
    moving = np.abs(traj.v) > v_floor
    if not np.any(moving):
        return 0.0
    ratio = np.abs(traj.omega[moving]) / np.abs(traj.v[moving])
    return max(float(np.max(ratio - cfg.kappa_max)), 0.0)


def solve(problem: ProblemSpec, init: Trajectory | SolveReport | None = None) -> SolveReport:
    """Minimize the penalty objective over the packed variables with box
    bounds on v, a and t.

    `init` may be a Trajectory, a previous SolveReport (warm start), or None
    for the coarse-path initial guess. A warm start with a different state
    count is resampled along arc length. When residual targets are unmet the
    penalty weights are scaled up and the solve continues from the current
    iterate, up to `penalty_rounds` rounds.
    """
    cfg = problem.config
    n = problem.corridor.n_states - 1
    if init is None:
        traj0 = initial_guess(problem.initial_path, cfg)
    elif isinstance(init, SolveReport):
        traj0 = init.trajectory
    else:
        traj0 = init
    if isinstance(init, SolveReport):
        # keep a solution of this exact problem verbatim; anything else is
        # re-seeded onto the current path so states line up with their
        # assigned polygons
        if traj0.n != n or (
            equality_residual_max(traj0, problem.start, problem.goal) >= cfg.equality_target
            or safety_violation_max(traj0, problem.corridor, cfg) >= cfg.safety_target
        ):
            traj0 = project_into_corridor(
                transfer_warm_start(traj0, problem.initial_path, cfg),
                problem.corridor, cfg)
    elif traj0.n != n:
        traj0 = resample_warm_start(traj0, n, cfg)

    lower, upper = packed_bounds(n, cfg)
    obj_tol = cfg.objective_tolerance
    if isinstance(init, SolveReport):
        # genuine warm start from a previous solution: stop as soon as
        # progress on the (already nearly optimal) objective stalls; the
        # continuation loop below re-tightens if residual targets slipped
        obj_tol = max(obj_tol, cfg.warm_objective_tolerance)
    opts = SolverOptions(
        max_iterations=cfg.max_iterations,
        history_size=cfg.history_size,
        gradient_tolerance=cfg.gradient_tolerance,
        objective_change_floor=obj_tol,
        line_search_refine=cfg.line_search_refine,
    )

    t0 = time.perf_counter()
    z = pack(traj0)
    leq, lie = cfg.lambda_eq, cfg.lambda_ie
    iterations = evaluations = 0
    reason = "max-iter"
    for _ in range(max(1, cfg.penalty_rounds)):
        obj = PenaltyObjective(problem.corridor, cfg, problem.start, problem.goal, leq, lie)
        box = BoxProblem(obj.dimension, lower, upper, obj)
        res = minimize(box, z, opts)
        z = res.x
        iterations += res.iterations
        evaluations += res.evaluations
        reason = res.reason
        traj = unpack(z, n)
        eq_unmet = equality_residual_max(traj, problem.start, problem.goal) >= cfg.equality_target
        ie_unmet = safety_violation_max(traj, problem.corridor, cfg) >= cfg.safety_target
        if not (eq_unmet or ie_unmet):
            break
        # only grow the weight of the term that missed its target: growing
        # both just rescales the balance between them and leaves the
        # equilibrium (and its residuals) where it was
        if eq_unmet:
            leq *= cfg.penalty_growth
        if ie_unmet:
            lie *= cfg.penalty_growth
    wall_ms = (time.perf_counter() - t0) * 1e3

    traj = unpack(z, n)
    base_obj = PenaltyObjective(problem.corridor, cfg, problem.start, problem.goal)
    value, _ = base_obj(z)
    return SolveReport(
        trajectory=traj,
        objective=float(value),
        max_equality_residual=equality_residual_max(traj, problem.start, problem.goal),
        max_safety_violation=safety_violation_max(traj, problem.corridor, cfg),
        max_curvature_violation=curvature_violation_max(traj, cfg),
        iterations=iterations,
        evaluations=evaluations,
        wall_time_ms=wall_ms,
        converged=(reason == "converged"),
        solver_reason=reason,
    )


def naive_time_parameterization(path: CoarsePath, cfg: PlannerConfig) -> Trajectory:
    """Trapezoidal speed profile at the velocity/acceleration limits along the
    coarse path; the smoothness baseline the optimized trajectory is compared
    against."""
    poses = path.poses
    if len(poses) < 2:
        raise ValueError("need at least two poses")
    x = np.array([p.x for p in poses])
    y = np.array([p.y for p in poses])
    theta = np.array([p.theta for p in poses])
    n1 = len(poses)
    v = np.zeros(n1)

    # split into constant-direction runs; trapezoid within each run
    breaks = [0] + path.switch_indices() + [n1 - 1]
    for b0, b1 in zip(breaks[:-1], breaks[1:]):
        seg = np.hypot(np.diff(x[b0 : b1 + 1]), np.diff(y[b0 : b1 + 1]))
        s = np.concatenate([[0.0], np.cumsum(seg)])
        total = s[-1]
        if total <= 0:
            continue
        speed = np.minimum(
            cfg.v_max,
            np.minimum(np.sqrt(2.0 * cfg.a_max * s), np.sqrt(2.0 * cfg.a_max * (total - s))),
        )
        v[b0 : b1 + 1] = poses[b0].direction * speed
    v[0] = v[-1] = 0.0

    seg = np.hypot(np.diff(x), np.diff(y))
    avg = np.maximum(0.5 * (np.abs(v[:-1]) + np.abs(v[1:])), 0.1 * cfg.v_max)
    t = np.maximum(seg / avg, cfg.t_min)
    a = np.zeros(n1)
    a[:-1] = np.diff(np.abs(v)) / t * np.sign(v[1:] + v[:-1] + 1e-12)
    omega = np.zeros(n1)
    omega[:-1] = np.array([wrap_angle(theta[i + 1] - theta[i]) for i in range(n1 - 1)]) / t
    return Trajectory(x, y, theta, v, a, omega, t)
