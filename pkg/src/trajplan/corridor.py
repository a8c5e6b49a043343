"""Safe corridor construction: overlapping axis-aligned free rectangles along
a coarse path, exported in half-space (A x <= b) form, plus the contiguous
assignment of trajectory states to polygons.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .gridmap import OccupancyGrid
from .hybrid_astar import CoarsePath


class CorridorFailure(RuntimeError):
    """A path point admits no free polygon or consecutive polygons cannot be
    made to overlap."""


@dataclass(frozen=True)
class HPolygon:
    """Convex region {x : A x <= b}; rows of A are unit outward normals."""

    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.asarray(self.b, dtype=float).ravel()
        if A.shape[0] != b.shape[0] or A.shape[1] != 2:
            raise ValueError(f"inconsistent half-space shapes {A.shape}, {b.shape}")
        norms = np.linalg.norm(A, axis=1)
        if np.any(norms < 1e-12):
            raise ValueError("zero-norm half-space normal")
        object.__setattr__(self, "A", A / norms[:, None])
        object.__setattr__(self, "b", b / norms)
        self.A.setflags(write=False)
        self.b.setflags(write=False)

    @property
    def m(self) -> int:
        return self.A.shape[0]

    def contains(self, point, slack: float = 0.0) -> bool:
        """True iff A.point - b <= slack for every half-space."""
        if slack < 0:
            raise ValueError(f"slack must be non-negative, got {slack}")
        return bool(np.all(self.A @ np.asarray(point, dtype=float) - self.b <= slack))

    def violation(self, point) -> float:
        """Largest half-space violation at the point (<= 0 means inside)."""
        return float(np.max(self.A @ np.asarray(point, dtype=float) - self.b))

    @classmethod
    def from_rect(cls, xmin, ymin, xmax, ymax) -> "HPolygon":
        A = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
        b = np.array([xmax, -xmin, ymax, -ymin])
        return cls(A, b)

    def vertices(self) -> np.ndarray:
        """Vertex list (counter-clockwise) for plotting/serialization.

        Only valid for the axis-aligned rectangles this module produces.
        """
        xmax, xmin = self.b[0], -self.b[1]
        ymax, ymin = self.b[2], -self.b[3]
        return np.array([[xmin, ymin], [xmax, ymin], [xmax, ymax], [xmin, ymax]])


@dataclass
class Corridor:
    polygons: list[HPolygon]
    assignment: list[list[int]]  # per polygon, contiguous state indices

    def __post_init__(self):
        flat = [i for sub in self.assignment for i in sub]
        if flat != list(range(len(flat))):
            raise ValueError("assignment must be contiguous and cover 0..n exactly once")
        if len(self.polygons) != len(self.assignment):
            raise ValueError("one index list per polygon required")
        if any(len(sub) == 0 for sub in self.assignment):
            raise ValueError("empty polygon assignment")

    @property
    def n_states(self) -> int:
        return sum(len(sub) for sub in self.assignment)

    def polygon_of_state(self, k: int) -> int:
        for i, sub in enumerate(self.assignment):
            if k in sub:
                return i
        raise IndexError(f"state {k} not assigned")


def _grow_rect(grid: OccupancyGrid, col: int, row: int, max_size: float) -> tuple[int, int, int, int]:
    """Greedily grow a free axis-aligned cell rectangle [c0,c1]x[r0,r1]
    (inclusive) around a free seed cell, one cell strip at a time in the four
    axis directions, until blocked or the metric size cap is hit."""
    cells = grid.cells
    c0 = c1 = col
    r0 = r1 = row
    max_cells = max(1, int(round(max_size / grid.resolution)))
    blocked = [False, False, False, False]  # +x, -x, +y, -y
    while not all(blocked):
        if not blocked[0]:
            if c1 + 1 < grid.width and (c1 - c0 + 2) <= max_cells and not cells[r0 : r1 + 1, c1 + 1].any():
                c1 += 1
            else:
                blocked[0] = True
        if not blocked[1]:
            if c0 - 1 >= 0 and (c1 - c0 + 2) <= max_cells and not cells[r0 : r1 + 1, c0 - 1].any():
                c0 -= 1
            else:
                blocked[1] = True
        if not blocked[2]:
            if r1 + 1 < grid.height and (r1 - r0 + 2) <= max_cells and not cells[r1 + 1, c0 : c1 + 1].any():
                r1 += 1
            else:
                blocked[2] = True
        if not blocked[3]:
            if r0 - 1 >= 0 and (r1 - r0 + 2) <= max_cells and not cells[r0 - 1, c0 : c1 + 1].any():
                r0 -= 1
            else:
                blocked[3] = True
    return c0, c1, r0, r1


def _rect_world(grid: OccupancyGrid, c0, c1, r0, r1) -> tuple[float, float, float, float]:
    ox, oy = grid.origin
    res = grid.resolution
    return (ox + c0 * res, oy + r0 * res, ox + (c1 + 1) * res, oy + (r1 + 1) * res)


def _rects_overlap(a, b) -> bool:
    """Open-interior intersection test for (xmin, ymin, xmax, ymax) rects."""
    return a[0] < b[2] and b[0] < a[2] and a[1] < b[3] and b[1] < a[3]


def build_corridor(grid: OccupancyGrid, path: CoarsePath, max_size: float = 10.0) -> Corridor:
    """Cover the path with overlapping free rectangles on the inflated grid.

    Walks the path points, growing a fresh rectangle whenever the current one
    no longer contains the next point, and bridges non-overlapping consecutive
    rectangles with a rectangle seeded at the last covered point.
    """
    points = [(p.x, p.y) for p in path.poses]
    if not points:
        raise CorridorFailure("empty path")

    def rect_at(pt):
        col, row = grid.world_to_cell(*pt)
        if not grid.in_bounds(col, row) or grid.cells[row, col]:
            raise CorridorFailure(f"path point {pt} has no free cell on the inflated grid")
        return _rect_world(grid, *_grow_rect(grid, col, row, max_size))

    def inside(rect, pt, tol=1e-9):
        return rect[0] - tol <= pt[0] <= rect[2] + tol and rect[1] - tol <= pt[1] <= rect[3] + tol

    rects = [rect_at(points[0])]
    assignment = [[0]]
    for k, pt in enumerate(points[1:], start=1):
        if inside(rects[-1], pt):
            assignment[-1].append(k)
            continue
        nrect = rect_at(pt)
        if not _rects_overlap(rects[-1], nrect):
            # bridge via a rectangle grown at the shared path segment midpoint
            prev = points[k - 1]
            mid = (0.5 * (prev[0] + pt[0]), 0.5 * (prev[1] + pt[1]))
            bridge = rect_at(mid)
            if not (_rects_overlap(rects[-1], bridge) and _rects_overlap(bridge, nrect)):
                raise CorridorFailure(
                    f"cannot bridge corridor gap between states {k - 1} and {k}"
                )
            if inside(bridge, pt):
                rects.append(bridge)
                assignment.append([k])
                continue
            if inside(bridge, prev) and len(assignment[-1]) > 1:
                # move the junction state into the bridge so it lies in both
                assignment[-1].pop()
                rects.append(bridge)
                assignment.append([k - 1])
            else:
                raise CorridorFailure(
                    f"bridge polygon covers neither endpoint of segment {k - 1}..{k}"
                )
        rects.append(nrect)
        assignment.append([k])

    polys = [HPolygon.from_rect(*r) for r in rects]
    return Corridor(polys, assignment)


def contains(poly: HPolygon, point, slack: float = 0.0) -> bool:
    """Module-level alias for HPolygon.contains."""
    return poly.contains(point, slack)
