"""Lattice search over (x, y, heading, direction) producing a coarse
kinematically plausible path with forward/reverse flags.

Motion primitives are fixed-length arcs at a handful of curvatures, expanded
forward and in reverse. The heuristic is the max of Euclidean distance and a
2D grid Dijkstra distance-to-goal, both admissible.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .gridmap import OccupancyGrid

FORWARD = 1
REVERSE = -1


class PlanningError(RuntimeError):
    pass


class NoPath(PlanningError):
    pass


class StartOccupied(PlanningError):
    pass


class GoalOccupied(PlanningError):
    pass


def wrap_angle(a: float) -> float:
    """Normalize an angle to (-pi, pi]."""
    a = math.fmod(a, 2.0 * math.pi)
    if a <= -math.pi:
        a += 2.0 * math.pi
    elif a > math.pi:
        a -= 2.0 * math.pi
    return a


@dataclass(frozen=True)
class Pose:
    x: float
    y: float
    theta: float
    direction: int = FORWARD  # direction of the outgoing segment; last pose copies incoming

    def __post_init__(self):
        object.__setattr__(self, "theta", wrap_angle(self.theta))
        if self.direction not in (FORWARD, REVERSE):
            raise ValueError(f"direction must be +1 or -1, got {self.direction}")


@dataclass
class CoarsePath:
    poses: list[Pose]
    arc_length: np.ndarray  # cumulative, signed by segment direction

    @property
    def total_length(self) -> float:
        """Unsigned polyline length."""
        return float(np.sum(np.abs(np.diff(self.arc_length)))) if len(self.poses) > 1 else 0.0

    def switch_indices(self) -> list[int]:
        """Indices of poses where travel direction flips."""
        return [
            i
            for i in range(1, len(self.poses) - 1)
            if self.poses[i].direction != self.poses[i - 1].direction
        ]


@dataclass
class SearchParams:
    kappa_max: float = 0.5
    disc_offset: float = 0.8  # front disc center offset along heading
    step_factor: float = 1.5  # primitive arc length in grid resolutions
    theta_bins: int = 72
    reverse_cost: float = 2.0  # multiplier on reverse arc length
    switch_cost: float = 2.0  # fixed penalty per gear change, meter-equivalent
    eps_position: float = 0.3
    eps_heading: float = math.radians(10.0)
    allow_reverse: bool = True
    max_expansions: int = 400_000


def _pose_collides(grid: OccupancyGrid, x, y, theta, disc_offset: float) -> bool:
    """Two-disc check on an inflated grid: both disc centers must be free."""
    fx = x + disc_offset * np.cos(theta)
    fy = y + disc_offset * np.sin(theta)
    return bool(
        np.any(grid.occupied_points(np.atleast_1d(x), np.atleast_1d(y)))
        or np.any(grid.occupied_points(np.atleast_1d(fx), np.atleast_1d(fy)))
    )


def dijkstra_to_goal(grid: OccupancyGrid, goal_xy: tuple[float, float]) -> np.ndarray:
    """Metric 8-connected shortest-path distance from every free cell to the
    goal cell. Occupied/unreachable cells get +inf. Admissible lower bound for
    any collision-free path on this grid."""
    dist = np.full((grid.height, grid.width), np.inf)
    gc, gr = grid.world_to_cell(*goal_xy)
    if not grid.in_bounds(gc, gr) or grid.cells[gr, gc]:
        return dist
    res = grid.resolution
    diag = res * math.sqrt(2.0)
    dist[gr, gc] = 0.0
    heap = [(0.0, gc, gr)]
    cells = grid.cells
    while heap:
        d, c, r = heapq.heappop(heap)
        if d > dist[r, c]:
            continue
        for dc, dr in ((1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)):
            nc, nr = c + dc, r + dr
            if 0 <= nc < grid.width and 0 <= nr < grid.height and not cells[nr, nc]:
                nd = d + (diag if dc and dr else res)
                if nd < dist[nr, nc]:
                    dist[nr, nc] = nd
                    heapq.heappush(heap, (nd, nc, nr))
    return dist


@dataclass
class _Node:
    x: float
    y: float
    theta: float
    direction: int
    g: float
    parent_key: tuple | None
    switched: bool = False


def _primitives(params: SearchParams, resolution: float):
    """Arc primitives as (curvature, direction, samples_at_theta0, cost).

    samples are local (dx, dy, dtheta) at heading 0, sampled at <= half
    resolution steps, endpoint included last.
    """
    step = params.step_factor * resolution
    km = params.kappa_max
    curvatures = [-km, -km / 2.0, 0.0, km / 2.0, km]
    directions = [FORWARD, REVERSE] if params.allow_reverse else [FORWARD]
    nsamp = max(2, int(math.ceil(step / (0.5 * resolution))))
    svals = np.linspace(step / nsamp, step, nsamp)
    prims = []
    for d in directions:
        for kappa in curvatures:
            s = d * svals  # signed arc length along the primitive
            if abs(kappa) < 1e-12:
                dx, dy, dth = s, np.zeros_like(s), np.zeros_like(s)
            else:
                dth = s * kappa
                dx = np.sin(dth) / kappa
                dy = (1.0 - np.cos(dth)) / kappa
            cost = step * (params.reverse_cost if d == REVERSE else 1.0)
            prims.append((kappa, d, np.stack([dx, dy, dth], axis=1), cost))
    return prims


def plan_path(grid: OccupancyGrid, start: Pose, goal: Pose, params: SearchParams | None = None) -> CoarsePath:
    """Search for a collision-free coarse path from start to goal.

    `grid` must already be inflated by the disc radius; collision checking
    reduces to the two disc-center points.
    """
    params = params or SearchParams()
    if _pose_collides(grid, start.x, start.y, start.theta, params.disc_offset):
        raise StartOccupied(f"start pose ({start.x:.2f}, {start.y:.2f}) is in collision")
    if _pose_collides(grid, goal.x, goal.y, goal.theta, params.disc_offset):
        raise GoalOccupied(f"goal pose ({goal.x:.2f}, {goal.y:.2f}) is in collision")

    def at_goal(x, y, theta):
        return (
            math.hypot(x - goal.x, y - goal.y) <= params.eps_position
            and abs(wrap_angle(theta - goal.theta)) <= params.eps_heading
        )

    if at_goal(start.x, start.y, start.theta):
        return CoarsePath([replace(start)], np.zeros(1))

    h2d = dijkstra_to_goal(grid, (goal.x, goal.y))
    if not np.isfinite(h2d).any():
        raise NoPath("goal cell unreachable on the grid")

    def heuristic(x, y):
        c, r = grid.world_to_cell(x, y)
        hd = h2d[r, c] if grid.in_bounds(c, r) else np.inf
        return max(math.hypot(x - goal.x, y - goal.y), hd)

    bin_size = 2.0 * math.pi / params.theta_bins

    def key_of(x, y, theta, direction):
        c, r = grid.world_to_cell(x, y)
        tb = int(round(theta / bin_size)) % params.theta_bins
        return (c, r, tb, direction)

    prims = _primitives(params, grid.resolution)
    # stack every primitive's local samples so one expansion does a single
    # vectorized collision query over all primitives and both disc points;
    # the front-disc point is rigid in the robot frame, so it rotates with
    # the same two scalar trig values as the rear point
    LX = np.stack([p[2][:, 0] for p in prims])  # (nprims, nsamp)
    LY = np.stack([p[2][:, 1] for p in prims])
    LTH = np.stack([p[2][:, 2] for p in prims])
    CX = np.concatenate([LX, LX + params.disc_offset * np.cos(LTH)], axis=1)
    CY = np.concatenate([LY, LY + params.disc_offset * np.sin(LTH)], axis=1)
    END_TH = LTH[:, -1]
    nodes: dict[tuple, _Node] = {}
    start_key = key_of(start.x, start.y, start.theta, start.direction)
    nodes[start_key] = _Node(start.x, start.y, start.theta, start.direction, 0.0, None)
    h0 = heuristic(start.x, start.y)
    if not math.isfinite(h0):
        raise NoPath("start cell disconnected from goal")
    heap = [(h0, 0, start_key)]
    counter = 1
    expansions = 0
    goal_key = None

    while heap:
        _, _, key = heapq.heappop(heap)
        node = nodes[key]
        if at_goal(node.x, node.y, node.theta):
            goal_key = key
            break
        expansions += 1
        if expansions > params.max_expansions:
            break
        ct, st = math.cos(node.theta), math.sin(node.theta)
        PX = node.x + ct * CX - st * CY
        PY = node.y + st * CX + ct * CY
        blocked = grid.occupied_points(PX, PY).any(axis=1)
        nsamp = LX.shape[1]
        for i, (kappa, d, samples, cost) in enumerate(prims):
            if blocked[i]:
                continue
            switched = d != node.direction
            g = node.g + cost + (params.switch_cost if switched else 0.0)
            nx = float(PX[i, nsamp - 1])
            ny = float(PY[i, nsamp - 1])
            nth = wrap_angle(node.theta + float(END_TH[i]))
            c, r = grid.world_to_cell(nx, ny)
            tb = int(round(nth / bin_size)) % params.theta_bins
            nkey = (c, r, tb, d)
            existing = nodes.get(nkey)
            if existing is not None and existing.g <= g:
                continue
            hd = h2d[r, c] if 0 <= c < grid.width and 0 <= r < grid.height else np.inf
            h = max(math.hypot(nx - goal.x, ny - goal.y), hd)
            if not math.isfinite(h):
                continue
            nodes[nkey] = _Node(nx, ny, nth, d, g, key, switched)
            heapq.heappush(heap, (g + h, counter, nkey))
            counter += 1

    if goal_key is None:
        raise NoPath(f"search exhausted after {expansions} expansions")

    chain = []
    key = goal_key
    while key is not None:
        chain.append(nodes[key])
        key = nodes[key].parent_key
    chain.reverse()

    # outgoing-direction convention: each pose carries the direction of the
    # segment leaving it; the last pose copies the incoming direction
    poses = []
    for i, nd in enumerate(chain):
        out_dir = chain[i + 1].direction if i + 1 < len(chain) else nd.direction
        poses.append(Pose(nd.x, nd.y, nd.theta, out_dir))
    arc = np.zeros(len(poses))
    for i in range(1, len(poses)):
        seg = math.hypot(poses[i].x - poses[i - 1].x, poses[i].y - poses[i - 1].y)
        arc[i] = arc[i - 1] + poses[i - 1].direction * seg
    return CoarsePath(poses, arc)


def resample_path(path: CoarsePath, spacing: float) -> CoarsePath:
    """Resample a coarse path at approximately uniform arc-length spacing.

    Endpoints and gear-switch poses are retained exactly; each constant-
    direction run is resampled independently so switches stay verbatim.
    """
    if spacing <= 0:
        raise ValueError(f"spacing must be positive, got {spacing}")
    poses = path.poses
    if len(poses) < 2:
        return CoarsePath(list(poses), path.arc_length.copy())

    # split into constant-direction runs at switch poses
    breaks = [0] + path.switch_indices() + [len(poses) - 1]
    out: list[Pose] = []
    for b0, b1 in zip(breaks[:-1], breaks[1:]):
        run = poses[b0 : b1 + 1]
        seglen = [
            math.hypot(run[i + 1].x - run[i].x, run[i + 1].y - run[i].y)
            for i in range(len(run) - 1)
        ]
        cum = np.concatenate([[0.0], np.cumsum(seglen)])
        total = cum[-1]
        nseg = max(1, int(round(total / spacing))) if total > 0 else 1
        targets = np.linspace(0.0, total, nseg + 1)
        run_dir = run[0].direction
        for j, s in enumerate(targets):
            if j == 0:
                if out:
                    continue  # run start already emitted as previous run's end
                out.append(run[0])
                continue
            if j == len(targets) - 1:
                out.append(run[-1])
                continue
            i = int(np.searchsorted(cum, s, side="right") - 1)
            i = min(i, len(run) - 2)
            denom = cum[i + 1] - cum[i]
            frac = (s - cum[i]) / denom if denom > 0 else 0.0
            x = run[i].x + frac * (run[i + 1].x - run[i].x)
            y = run[i].y + frac * (run[i + 1].y - run[i].y)
            dth = wrap_angle(run[i + 1].theta - run[i].theta)
            out.append(Pose(x, y, run[i].theta + frac * dth, run_dir))

    arc = np.zeros(len(out))
    for i in range(1, len(out)):
        seg = math.hypot(out[i].x - out[i - 1].x, out[i].y - out[i - 1].y)
        arc[i] = arc[i - 1] + out[i - 1].direction * seg
    return CoarsePath(out, arc)


def snap_path_to_free(grid: OccupancyGrid, path: CoarsePath) -> CoarsePath:
    """Pull path points that fall on occupied cells back onto free ones.

    Resampling interpolates straight chords between searched poses, and a
    chord can clip the corner of an occupied cell even though both endpoints
    were collision-checked.  Each offending point is bisected toward its
    (already free) predecessor until its cell is free; headings and
    directions are untouched.
    """

    def free(x, y):
        c, r = grid.world_to_cell(x, y)
        return grid.in_bounds(c, r) and not grid.cells[r, c]

    poses = list(path.poses)
    if poses and not free(poses[0].x, poses[0].y):
        raise PlanningError(f"path start ({poses[0].x}, {poses[0].y}) lies on an occupied cell")
    changed = False
    for k in range(1, len(poses)):
        p = poses[k]
        if free(p.x, p.y):
            continue
        anchor = poses[k - 1]
        gx, gy = anchor.x, anchor.y  # known free
        bx, by = p.x, p.y
        for _ in range(30):
            mx, my = 0.5 * (gx + bx), 0.5 * (gy + by)
            if free(mx, my):
                gx, gy = mx, my
            else:
                bx, by = mx, my
        poses[k] = Pose(gx, gy, p.theta, p.direction)
        changed = True
    if not changed:
        return path
    arc = np.zeros(len(poses))
    for i in range(1, len(poses)):
        seg = math.hypot(poses[i].x - poses[i - 1].x, poses[i].y - poses[i - 1].y)
        arc[i] = arc[i - 1] + poses[i - 1].direction * seg
    return CoarsePath(poses, arc)
