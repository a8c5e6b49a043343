#!/usr/bin/env python3
"""Regenerate the shipped scenario maps under scenarios/maps/.

Deterministic; re-running overwrites the same files.
"""

import pathlib
import sys

import numpy as np

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from trajplan.gridmap import OccupancyGrid, save_grid
from trajplan.hybrid_astar import dijkstra_to_goal

RES = 0.25
OUT = pathlib.Path(__file__).resolve().parents[1] / "scenarios" / "maps"


def empty(width_m, height_m):
    w, h = int(round(width_m / RES)), int(round(height_m / RES))
    return np.zeros((h, w), dtype=bool)


def fill_rect(cells, xmin, ymin, xmax, ymax):
    c0 = max(0, int(np.floor(xmin / RES)))
    c1 = min(cells.shape[1], int(np.ceil(xmax / RES)))
    r0 = max(0, int(np.floor(ymin / RES)))
    r1 = min(cells.shape[0], int(np.ceil(ymax / RES)))
    cells[r0:r1, c0:c1] = True


def border(cells, thickness=0.5):
    n = int(round(thickness / RES))
    cells[:n, :] = cells[-n:, :] = True
    cells[:, :n] = cells[:, -n:] = True


def grid_of(cells):
    h, w = cells.shape
    return OccupancyGrid(w, h, RES, (0.0, 0.0), cells)


def maze_30x30():
    cells = empty(30, 30)
    border(cells)
    # S-shaped walls: over the first, under the second
    fill_rect(cells, 9.5, 0.0, 10.5, 22.0)
    fill_rect(cells, 19.5, 8.0, 20.5, 30.0)
    return grid_of(cells)


def parking_48x30():
    cells = empty(48, 30)
    border(cells)
    for y0 in (8.0, 18.0):
        for x0 in (6.0, 14.0, 22.0, 30.0, 38.0):
            fill_rect(cells, x0, y0, x0 + 4.0, y0 + 4.0)
    return grid_of(cells)


def irregular_60x40():
    cells = empty(60, 40)
    border(cells)
    rng = np.random.default_rng(7)
    start = np.array([3.0, 20.0])
    goal = np.array([57.0, 20.0])
    placed = 0
    while placed < 28:
        x = rng.uniform(4.0, 54.0)
        y = rng.uniform(4.0, 34.0)
        w = rng.uniform(1.0, 4.5)
        h = rng.uniform(1.0, 4.5)
        center = np.array([x + w / 2.0, y + h / 2.0])
        if np.linalg.norm(center - start) < 5.0 or np.linalg.norm(center - goal) < 5.0:
            continue
        fill_rect(cells, x, y, x + w, y + h)
        placed += 1
    g = grid_of(cells)
    # keep the shipped map honest: start and goal must stay connected after
    # half-meter inflation
    inflated = g.inflate(0.5)
    dist = dijkstra_to_goal(inflated, tuple(goal))
    c, r = inflated.world_to_cell(*start)
    assert np.isfinite(dist[r, c]), "irregular map is disconnected; change the seed"
    return g


def reverse_bay_20x20():
    cells = empty(20, 20)
    border(cells)
    # dead-end bay opening downward into the open area
    fill_rect(cells, 7.0, 11.5, 8.2, 17.0)    # left wall
    fill_rect(cells, 11.8, 11.5, 13.0, 17.0)  # right wall
    fill_rect(cells, 7.0, 16.4, 13.0, 17.0)   # back wall
    return grid_of(cells)


def open_20x20():
    cells = empty(20, 20)
    border(cells)
    return grid_of(cells)


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for name, builder in (
        ("maze_30x30", maze_30x30),
        ("parking_48x30", parking_48x30),
        ("irregular_60x40", irregular_60x40),
        ("reverse_bay_20x20", reverse_bay_20x20),
        ("open_20x20", open_20x20),
    ):
        path = OUT / f"{name}.grid"
        save_grid(builder(), path)
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
