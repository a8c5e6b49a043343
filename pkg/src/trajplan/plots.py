"""Plot builders: map/corridor/trajectory overlay and dynamic profiles.

Each builder returns the matplotlib Figure so callers (and tests) can inspect
the plotted data; `save_figure` renders to SVG or any other matplotlib-backed
format.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib.patches import Polygon as MplPolygon

from .config import PlannerConfig
from .corridor import Corridor
from .gridmap import OccupancyGrid
from .hybrid_astar import CoarsePath
from .trajectory import DenseTrajectory


def overlay_figure(
    grid: OccupancyGrid,
    corridor: Corridor | None,
    initial_path: CoarsePath | None,
    dense: DenseTrajectory | None,
) -> plt.Figure:
    """Occupancy map with corridor polygons, the coarse path, and the
    optimized trajectory overlaid."""
    fig, ax = plt.subplots(figsize=(7, 7 * grid.height / max(grid.width, 1)))
    ox, oy = grid.origin
    extent = (
        ox,
        ox + grid.width * grid.resolution,
        oy,
        oy + grid.height * grid.resolution,
    )
    ax.imshow(
        grid.cells,
        origin="lower",
        extent=extent,
        cmap="Greys",
        vmin=0.0,
        vmax=1.0,
        interpolation="none",
    )
    if corridor is not None:
        for poly in corridor.polygons:
            ax.add_patch(
                MplPolygon(
                    poly.vertices(),
                    closed=True,
                    facecolor="tab:blue",
                    edgecolor="tab:blue",
                    alpha=0.15,
                    linewidth=1.0,
                )
            )
    if initial_path is not None and len(initial_path.poses) > 0:
        px = [p.x for p in initial_path.poses]
        py = [p.y for p in initial_path.poses]
        ax.plot(px, py, "--", color="tab:orange", linewidth=1.2, label="initial path")
    if dense is not None:
        ax.plot(dense.x, dense.y, color="tab:red", linewidth=1.8,
                label="optimized trajectory", gid="trajectory")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_aspect("equal")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    return fig


def profile_figure(dense: DenseTrajectory, cfg: PlannerConfig) -> plt.Figure:
    """Velocity, angular velocity and acceleration against time with the
    configured limits drawn as horizontal lines."""
    fig, axes = plt.subplots(3, 1, sharex=True, figsize=(7, 6))
    panels = (
        (dense.v, "v [m/s]", (cfg.v_min, cfg.v_max)),
        (dense.omega, "omega [rad/s]", None),
        (dense.a, "a [m/s^2]", (cfg.a_min, cfg.a_max)),
    )
    for ax, (series, label, limits) in zip(axes, panels):
        ax.plot(dense.time, series, color="tab:blue", linewidth=1.4)
        if limits is not None:
            for lim in limits:
                ax.axhline(lim, color="tab:red", linestyle=":", linewidth=1.0)
        ax.set_ylabel(label)
        ax.grid(True, alpha=0.3)
    axes[-1].set_xlabel("time [s]")
    fig.tight_layout()
    return fig


def save_figure(fig: plt.Figure, path) -> None:
    fig.savefig(path)
    plt.close(fig)
