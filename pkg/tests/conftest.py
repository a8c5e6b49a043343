"""Shared fixtures and grid/problem builders for the test suite."""

import numpy as np
import pytest

from trajplan import (
    CoarsePath,
    Corridor,
    HPolygon,
    OccupancyGrid,
    PlannerConfig,
    Pose,
    ProblemSpec,
)
from trajplan.hybrid_astar import FORWARD


def make_grid(width, height, resolution=1.0, origin=(0.0, 0.0), occupied=()):
    """Build a grid with the given (col, row) cells occupied."""
    cells = np.zeros((height, width), dtype=bool)
    for col, row in occupied:
        cells[row, col] = True
    return OccupancyGrid(width, height, resolution, origin, cells)


def straight_path(length=8.0, spacing=1.0, x0=1.0, y=2.0):
    """Straight forward path along +x with uniform pose spacing."""
    nseg = int(round(length / spacing))
    poses = [Pose(x0 + i * spacing, y, 0.0, FORWARD) for i in range(nseg + 1)]
    arc = np.arange(nseg + 1, dtype=float) * spacing
    return CoarsePath(poses, arc)


def straight_problem(cfg=None, length=8.0, spacing=1.0):
    """Single-rectangle corridor around a straight path: the simplest
    end-to-end optimization problem."""
    cfg = cfg or PlannerConfig()
    path = straight_path(length, spacing)
    n1 = len(path.poses)
    poly = HPolygon.from_rect(-1.0, 0.0, length + 3.0, 4.0)
    corridor = Corridor([poly], [list(range(n1))])
    start = np.array([path.poses[0].x, path.poses[0].y, 0.0, 0.0])
    goal = np.array([path.poses[-1].x, path.poses[-1].y, 0.0, 0.0])
    return ProblemSpec(start, goal, corridor, cfg, path)


def chain_corridor(n):
    """Three overlapping rectangles along +x with n+1 states split between
    them; used by the gradient-oracle tests."""
    polys = [
        HPolygon.from_rect(0.0, 0.0, 12.0, 4.0),
        HPolygon.from_rect(10.0, 0.0, 22.0, 4.0),
        HPolygon.from_rect(20.0, 0.0, 32.0, 4.0),
    ]
    n1 = n + 1
    a = n1 // 3
    b = 2 * n1 // 3
    assignment = [list(range(a)), list(range(a, b)), list(range(b, n1))]
    return Corridor(polys, assignment)


def random_feasible_points(rng, n, cfg, count):
    """Random packed vectors respecting the box bounds, with states scattered
    around the chain corridor."""
    from trajplan.objective import STATE_BLOCK

    points = []
    for _ in range(count):
        n1 = n + 1
        states = np.empty((n1, STATE_BLOCK))
        states[:, 0] = rng.uniform(1.0, 31.0, n1)    # x
        states[:, 1] = rng.uniform(0.2, 3.8, n1)     # y
        states[:, 2] = rng.uniform(-np.pi, np.pi, n1)
        states[:, 3] = rng.uniform(cfg.v_min, cfg.v_max, n1)
        states[:, 4] = rng.uniform(cfg.a_min, cfg.a_max, n1)
        states[:, 5] = rng.uniform(-2.0, 2.0, n1)    # omega
        t = rng.uniform(cfg.t_min, cfg.t_max, n)
        points.append(np.concatenate([states.ravel(), t]))
    return points


def batch_objective_values(obj, Z):
    """Objective value for a batch of packed vectors (rows of Z), vectorized.

    Mirrors PenaltyObjective's value computation (same tables, same tightened
    half-spaces) so finite differences over large batches stay affordable;
    callers should assert agreement with obj(z)[0] at the unperturbed point.
    """
    from trajplan.objective import STATE_BLOCK, penalty_L

    cfg = obj.cfg
    n = obj.n
    n1 = n + 1
    Z = np.atleast_2d(Z)
    states = Z[:, : STATE_BLOCK * n1].reshape(-1, n1, STATE_BLOCK)
    X, Y, TH = states[:, :, 0], states[:, :, 1], states[:, :, 2]
    V, A, W = states[:, :, 3], states[:, :, 4], states[:, :, 5]
    T = Z[:, STATE_BLOCK * n1:]
    ct, st = np.cos(TH), np.sin(TH)

    da = np.diff(A, axis=1)
    dw = np.diff(W, axis=1)
    J_o = np.sum(da**2 / T + dw**2 / T + cfg.delta_t * T, axis=1)

    start, goal = obj.start, obj.goal
    ex = X[:, 1:] - X[:, :-1] - 0.5 * T * (V[:, :-1] * ct[:, :-1] + V[:, 1:] * ct[:, 1:])
    ey = Y[:, 1:] - Y[:, :-1] - 0.5 * T * (V[:, :-1] * st[:, :-1] + V[:, 1:] * st[:, 1:])
    ev = V[:, 1:] - V[:, :-1] - 0.5 * T * (A[:, :-1] + A[:, 1:])
    phi = TH[:, :-1] + 0.5 * T * (W[:, :-1] + W[:, 1:])
    es = st[:, 1:] - np.sin(phi)
    ec = ct[:, 1:] - np.cos(phi)
    J_eq = np.sum(ex**2 + ey**2 + ev**2 + es**2 + ec**2, axis=1)
    J_eq += (X[:, 0] - start[0]) ** 2 + (Y[:, 0] - start[1]) ** 2
    J_eq += (st[:, 0] - np.sin(start[2])) ** 2 + (ct[:, 0] - np.cos(start[2])) ** 2
    J_eq += (V[:, 0] - start[3]) ** 2
    J_eq += (X[:, -1] - goal[0]) ** 2 + (Y[:, -1] - goal[1]) ** 2
    J_eq += (st[:, -1] - np.sin(goal[2])) ** 2 + (ct[:, -1] - np.cos(goal[2])) ** 2
    J_eq += (V[:, -1] - goal[3]) ** 2

    u = W**2 - V**2 * cfg.kappa_max**2
    J_ie = cfg.delta_kappa * np.sum(penalty_L(u, cfg.x_j), axis=1)
    J_ie += cfg.delta_v * np.sum(penalty_L(-V[:, :-1] * V[:, 1:], cfg.x_j), axis=1)
    sel = obj._sel
    px, py = X[:, sel], Y[:, sel]
    cs, sn = ct[:, sel], st[:, sel]
    res_b = px[:, :, None] * obj._A0 + py[:, :, None] * obj._A1 - obj._B
    res_f = res_b + cfg.disc_offset * (cs[:, :, None] * obj._A0 + sn[:, :, None] * obj._A1)
    J_ie += cfg.delta_s * (
        np.sum(penalty_L(res_b, cfg.x_j), axis=(1, 2))
        + np.sum(penalty_L(res_f, cfg.x_j), axis=(1, 2))
    )
    return cfg.lambda_o * J_o + obj.lambda_eq * J_eq + obj.lambda_ie * J_ie


def fd_gradient_batched(obj, z, step=1e-6):
    """Central finite-difference gradient via the batched value evaluator."""
    h = step * np.maximum(1.0, np.abs(z))
    Zp = z[None, :] + np.diag(h)
    Zm = z[None, :] - np.diag(h)
    return (batch_objective_values(obj, Zp) - batch_objective_values(obj, Zm)) / (2.0 * h)


def fd_gradient(fun, z, step=1e-6):
    """Central finite-difference gradient with per-component scaled step."""
    g = np.empty_like(z)
    for i in range(z.size):
        h = step * max(1.0, abs(z[i]))
        zp = z.copy()
        zm = z.copy()
        zp[i] += h
        zm[i] -= h
        g[i] = (fun(zp)[0] - fun(zm)[0]) / (2.0 * h)
    return g


@pytest.fixture
def default_config():
    return PlannerConfig()
