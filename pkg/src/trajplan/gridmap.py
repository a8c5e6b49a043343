"""2D occupancy grids: text-format loading, world/cell indexing, obstacle inflation.

Grid file format (UTF-8 text, '#' lines ignored)::

    GRID <width> <height> <resolution> <origin_x> <origin_y>
    <height rows of width space-separated 0/1 tokens, row 0 = lowest y>
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage


class GridFormatError(ValueError):
    """Raised when a grid file is malformed."""


@dataclass(frozen=True)
class OccupancyGrid:
    """Metric occupancy grid; immutable after construction.

    cells[row, col] indexes row = y cell, col = x cell. origin is the world
    position of the corner of cell (0, 0).
    """

    width: int
    height: int
    resolution: float
    origin: tuple[float, float]
    cells: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"grid dimensions must be positive, got {self.width}x{self.height}")
        if self.resolution <= 0:
            raise ValueError(f"resolution must be positive, got {self.resolution}")
        if self.cells.shape != (self.height, self.width):
            raise ValueError(
                f"cells shape {self.cells.shape} does not match height x width "
                f"({self.height}, {self.width})"
            )
        self.cells.setflags(write=False)

    # -- indexing ---------------------------------------------------------

    def world_to_cell(self, x: float, y: float) -> tuple[int, int]:
        """Map a world point to (col, row). Points exactly on an upper cell edge
        belong to the higher-index cell (floor rule). May return out-of-range
        indices; see in_bounds."""
        col = math.floor((x - self.origin[0]) / self.resolution)
        row = math.floor((y - self.origin[1]) / self.resolution)
        return col, row

    def cell_to_world(self, col: int, row: int) -> tuple[float, float]:
        """World coordinates of the center of cell (col, row)."""
        return (
            self.origin[0] + (col + 0.5) * self.resolution,
            self.origin[1] + (row + 0.5) * self.resolution,
        )

    def in_bounds(self, col: int, row: int) -> bool:
        return 0 <= col < self.width and 0 <= row < self.height

    def is_occupied(self, x: float, y: float) -> bool:
        """Occupancy at a world point. Out-of-bounds points count as occupied."""
        col, row = self.world_to_cell(x, y)
        if not self.in_bounds(col, row):
            return True
        return bool(self.cells[row, col])

    def occupied_points(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Vectorized is_occupied for arrays of world coordinates."""
        col = np.floor((np.asarray(x) - self.origin[0]) / self.resolution).astype(int)
        row = np.floor((np.asarray(y) - self.origin[1]) / self.resolution).astype(int)
        out = np.ones(col.shape, dtype=bool)
        ok = (col >= 0) & (col < self.width) & (row >= 0) & (row < self.height)
        out[ok] = self.cells[row[ok], col[ok]]
        return out

    # -- transforms -------------------------------------------------------

    def inflate(self, radius: float) -> "OccupancyGrid":
        """Dilate occupied cells by a Euclidean disc of the given metric radius.

        A cell becomes occupied iff some occupied input cell's center lies
        within `radius` of its center.
        """
        if radius < 0:
            raise ValueError(f"inflation radius must be non-negative, got {radius}")
        if radius == 0 or not self.cells.any():
            return OccupancyGrid(self.width, self.height, self.resolution, self.origin, self.cells.copy())
        ncells = int(np.floor(radius / self.resolution))
        dd = np.arange(-ncells, ncells + 1)
        dist = np.hypot(dd[:, None], dd[None, :]) * self.resolution
        structure = dist <= radius
        inflated = ndimage.binary_dilation(self.cells, structure=structure)
        return OccupancyGrid(self.width, self.height, self.resolution, self.origin, inflated)


def load_grid(path) -> OccupancyGrid:
    """Load an occupancy grid from the plain-text format."""
    try:
        with open(path, encoding="utf-8") as fh:
            raw_lines = fh.readlines()
    except OSError as exc:
        raise GridFormatError(f"{path}: cannot read grid file: {exc}") from exc

    lines = [
        (i + 1, line.strip())
        for i, line in enumerate(raw_lines)
        if line.strip() and not line.lstrip().startswith("#")
    ]
    if not lines:
        raise GridFormatError(f"{path}: empty grid file")

    lineno, header = lines[0]
    tokens = header.split()
    if len(tokens) != 6 or tokens[0] != "GRID":
        raise GridFormatError(
            f"{path}:{lineno}: expected 'GRID <w> <h> <res> <ox> <oy>', got {header!r}"
        )
    try:
        width, height = int(tokens[1]), int(tokens[2])
        resolution = float(tokens[3])
        origin = (float(tokens[4]), float(tokens[5]))
    except ValueError as exc:
        raise GridFormatError(f"{path}:{lineno}: bad header value: {exc}") from exc
    if width <= 0 or height <= 0 or resolution <= 0:
        raise GridFormatError(f"{path}:{lineno}: non-positive dimension or resolution")

    rows = lines[1:]
    if len(rows) != height:
        raise GridFormatError(
            f"{path}: expected {height} data rows, found {len(rows)}"
        )
    cells = np.zeros((height, width), dtype=bool)
    for r, (lineno, line) in enumerate(rows):
        toks = line.split()
        if len(toks) != width:
            raise GridFormatError(
                f"{path}:{lineno}: expected {width} tokens, found {len(toks)}"
            )
        for c, tok in enumerate(toks):
            if tok == "1":
                cells[r, c] = True
            elif tok != "0":
                raise GridFormatError(f"{path}:{lineno}: invalid cell token {tok!r} at column {c}")
    return OccupancyGrid(width, height, resolution, origin, cells)


def save_grid(grid: OccupancyGrid, path) -> None:
    """Write a grid in the plain-text format (inverse of load_grid)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(
            f"GRID {grid.width} {grid.height} {grid.resolution:g} "
            f"{grid.origin[0]:g} {grid.origin[1]:g}\n"
        )
        for row in grid.cells:
            fh.write(" ".join("1" if c else "0" for c in row) + "\n")
