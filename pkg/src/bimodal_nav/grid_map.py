"""3D occupancy grid: loading, world/grid transforms and free-space queries.

Grid file format (line oriented, ``#`` starts a comment line)::

    dims nx ny nz
    resolution r
    origin ox oy oz
    obstacle x y z      # zero or more, grid indices

Cells with ``z == 0`` form the walkable ground plane. Anything outside the
grid counts as occupied.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple, TextIO


class GridIndex(NamedTuple):
    x: int
    y: int
    z: int


class WorldPoint(NamedTuple):
    x: float
    y: float
    z: float


class GridFormatError(ValueError):
    """Base class for grid file parse errors."""


class MalformedHeaderError(GridFormatError):
    pass


class ObstacleCountError(GridFormatError):
    """Obstacle lines do not fit the declared dims (more obstacles than cells, duplicates)."""


class ObstacleBoundsError(GridFormatError):
    pass


class OutOfGridError(ValueError):
    """A point or index lies outside the grid."""


@dataclass(frozen=True)
class OccupancyGrid:
    dims: tuple[int, int, int]
    resolution: float
    origin: tuple[float, float, float]
    occupied: frozenset[GridIndex]

    def __post_init__(self):
        if len(self.dims) != 3 or any(int(d) != d or d < 1 for d in self.dims):
            raise ValueError(f"dims must be three positive integers, got {self.dims}")
        if not (self.resolution > 0 and math.isfinite(self.resolution)):
            raise ValueError(f"resolution must be positive, got {self.resolution}")
        for idx in self.occupied:
            if not self.in_bounds(idx):
                raise ObstacleBoundsError(f"obstacle {tuple(idx)} outside dims {self.dims}")

    @classmethod
    def empty(cls, dims, resolution=1.0, origin=(0.0, 0.0, 0.0)) -> "OccupancyGrid":
        return cls(tuple(dims), float(resolution), tuple(map(float, origin)), frozenset())

    def with_obstacles(self, cells: Iterable) -> "OccupancyGrid":
        extra = frozenset(GridIndex(*c) for c in cells)
        return OccupancyGrid(self.dims, self.resolution, self.origin, self.occupied | extra)

    def in_bounds(self, i) -> bool:
        return len(i) == 3 and all(0 <= int(c) < d for c, d in zip(i, self.dims))

    def is_free(self, i) -> bool:
        return self.in_bounds(i) and GridIndex(*i) not in self.occupied

    def can_descend(self, i) -> bool:
        if not self.in_bounds(i):
            raise OutOfGridError(f"index {tuple(i)} outside dims {self.dims}")
        return i[2] > 0 and self.is_free((i[0], i[1], i[2] - 1))

    def world_to_grid(self, p) -> GridIndex:
        idx = []
        for v, o, d in zip(p, self.origin, self.dims):
            c = math.floor((v - o) / self.resolution)
            if not 0 <= c < d:
                raise OutOfGridError(f"point {tuple(p)} outside grid extent")
            idx.append(c)
        return GridIndex(*idx)

    def grid_to_world(self, i) -> WorldPoint:
        if not self.in_bounds(i):
            raise OutOfGridError(f"index {tuple(i)} outside dims {self.dims}")
        return WorldPoint(*(o + (c + 0.5) * self.resolution for c, o in zip(i, self.origin)))

    def indices(self):
        nx, ny, nz = self.dims
        for x in range(nx):
            for y in range(ny):
                for z in range(nz):
                    yield GridIndex(x, y, z)


# Module-level aliases so callers can use the functional form.
def is_free(grid: OccupancyGrid, i) -> bool:
    return grid.is_free(i)


def can_descend(grid: OccupancyGrid, i) -> bool:
    return grid.can_descend(i)


def world_to_grid(grid: OccupancyGrid, p) -> GridIndex:
    return grid.world_to_grid(p)


def grid_to_world(grid: OccupancyGrid, i) -> WorldPoint:
    return grid.grid_to_world(i)


def _fields(line: str, key: str, n: int, conv, lineno: int):
    parts = line.split()
    if len(parts) != n + 1 or parts[0] != key:
        raise MalformedHeaderError(f"line {lineno}: expected '{key}' with {n} values, got {line!r}")
    try:
        return [conv(p) for p in parts[1:]]
    except ValueError as exc:
        raise MalformedHeaderError(f"line {lineno}: {exc}") from None


def load_grid(source: str | bytes | Path | TextIO) -> OccupancyGrid:
    """Parse a grid from a path, raw text/bytes, or an open text stream."""
    if isinstance(source, Path):
        text = source.read_text()
    elif isinstance(source, bytes):
        text = source.decode("utf-8")
    elif isinstance(source, str):
        text = source
    else:
        text = source.read()
        if isinstance(text, bytes):
            text = text.decode("utf-8")

    lines = [
        (n, ln.strip())
        for n, ln in enumerate(io.StringIO(text), start=1)
        if ln.strip() and not ln.lstrip().startswith("#")
    ]
    if len(lines) < 3:
        raise MalformedHeaderError("header needs 'dims', 'resolution' and 'origin' lines")

    dims = tuple(_fields(lines[0][1], "dims", 3, int, lines[0][0]))
    if any(d < 1 for d in dims):
        raise MalformedHeaderError(f"line {lines[0][0]}: dims must be positive")
    (res,) = _fields(lines[1][1], "resolution", 1, float, lines[1][0])
    if not (res > 0 and math.isfinite(res)):
        raise MalformedHeaderError(f"line {lines[1][0]}: resolution must be positive")
    origin = tuple(_fields(lines[2][1], "origin", 3, float, lines[2][0]))

    capacity = dims[0] * dims[1] * dims[2]
    obstacles: set[GridIndex] = set()
    for lineno, ln in lines[3:]:
        if not ln.startswith("obstacle"):
            raise GridFormatError(f"line {lineno}: unexpected record {ln.split()[0]!r}")
        try:
            idx = GridIndex(*_fields(ln, "obstacle", 3, int, lineno))
        except MalformedHeaderError as exc:
            raise GridFormatError(str(exc)) from None
        if not all(0 <= c < d for c, d in zip(idx, dims)):
            raise ObstacleBoundsError(f"line {lineno}: obstacle {tuple(idx)} outside dims {dims}")
        if idx in obstacles:
            raise ObstacleCountError(f"line {lineno}: duplicate obstacle {tuple(idx)}")
        obstacles.add(idx)
        if len(obstacles) > capacity:
            raise ObstacleCountError(f"{len(obstacles)} obstacles exceed {capacity} cells")

    return OccupancyGrid(dims, res, origin, frozenset(obstacles))


def _num(v: float) -> str:
    return repr(float(v))


def dump_grid(grid: OccupancyGrid) -> str:
    """Canonical text form: header, then obstacles sorted by (x, y, z)."""
    out = [
        "dims {} {} {}".format(*grid.dims),
        f"resolution {_num(grid.resolution)}",
        "origin {} {} {}".format(*map(_num, grid.origin)),
    ]
    out += ["obstacle {} {} {}".format(*i) for i in sorted(grid.occupied)]
    return "\n".join(out) + "\n"
