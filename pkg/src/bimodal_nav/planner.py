"""Bi-modal (walk/fly) grid planner.

Ground search first; if the goal is unreachable on the z = 0 plane, hand off
from the explored ground cell closest to the goal into a 3D search that drops
toward the ground whenever the cell below is free.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional

from .grid_map import GridIndex, OccupancyGrid, OutOfGridError, WorldPoint

SQRT2 = math.sqrt(2.0)


class Mode(str, Enum):
    GROUND = "GROUND"
    AIR = "AIR"


class Transition(str, Enum):
    NONE = "NONE"
    TAKEOFF = "TAKEOFF"
    LANDING = "LANDING"


class Connectivity2D(str, Enum):
    FOUR = "FOUR"
    EIGHT = "EIGHT"


class Connectivity3D(str, Enum):
    SIX = "SIX"
    TEN = "TEN"  # eight planar moves plus straight up / down


class Heuristic(str, Enum):
    EUCLIDEAN = "EUCLIDEAN"
    MANHATTAN = "MANHATTAN"


class PlanningError(ValueError):
    """Invalid planning request (endpoint occupied or out of bounds)."""


class NoPathError(RuntimeError):
    """Neither the ground nor the aerial phase reached the goal."""


@dataclass(frozen=True)
class SearchConfig:
    connectivity_2d: Connectivity2D = Connectivity2D.EIGHT
    connectivity_3d: Connectivity3D = Connectivity3D.SIX
    heuristic: Heuristic = Heuristic.EUCLIDEAN

    def __post_init__(self):
        object.__setattr__(self, "connectivity_2d", Connectivity2D(self.connectivity_2d))
        object.__setattr__(self, "connectivity_3d", Connectivity3D(self.connectivity_3d))
        object.__setattr__(self, "heuristic", Heuristic(self.heuristic))
        if self.heuristic is Heuristic.MANHATTAN and (
            self.connectivity_2d is not Connectivity2D.FOUR
            or self.connectivity_3d is not Connectivity3D.SIX
        ):
            raise ValueError("MANHATTAN heuristic is only admissible with FOUR/SIX connectivity")


_AXIS_2D = [(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0)]
_DIAG_2D = [(1, 1, 0), (1, -1, 0), (-1, 1, 0), (-1, -1, 0)]
_VERTICAL = [(0, 0, 1), (0, 0, -1)]


def moves_2d(conn: Connectivity2D) -> list[tuple[int, int, int]]:
    return _AXIS_2D + (_DIAG_2D if Connectivity2D(conn) is Connectivity2D.EIGHT else [])


def moves_3d(conn: Connectivity3D) -> list[tuple[int, int, int]]:
    planar = _AXIS_2D + (_DIAG_2D if Connectivity3D(conn) is Connectivity3D.TEN else [])
    return planar + _VERTICAL


def move_cost(d) -> float:
    return SQRT2 if abs(d[0]) + abs(d[1]) + abs(d[2]) == 2 else 1.0


def neighbors(grid: OccupancyGrid, node, moves) -> Iterable[tuple[GridIndex, float]]:
    """Free neighbours of ``node``; diagonals may not cut an occupied corner."""
    x, y, z = node
    for d in moves:
        nb = GridIndex(x + d[0], y + d[1], z + d[2])
        if not grid.is_free(nb):
            continue
        if d[0] and d[1] and not (grid.is_free((x + d[0], y, z)) and grid.is_free((x, y + d[1], z))):
            continue
        yield nb, move_cost(d)


def heuristic_value(kind: Heuristic, a, b) -> float:
    if kind is Heuristic.MANHATTAN:
        return float(sum(abs(p - q) for p, q in zip(a, b)))
    return math.sqrt(sum((p - q) ** 2 for p, q in zip(a, b)))


def path_cost(path: list) -> float:
    """Cost of a cell path, summed from move counts so equal paths compare exactly."""
    straight = diag = 0
    for a, b in zip(path, path[1:]):
        if sum(abs(p - q) for p, q in zip(a, b)) == 2:
            diag += 1
        else:
            straight += 1
    return straight + diag * SQRT2


@dataclass
class SearchResult:
    path: Optional[list[GridIndex]]
    parents: dict[GridIndex, Optional[GridIndex]]  # closed set with parent links
    expanded: list[GridIndex] = field(default_factory=list)

    @property
    def found(self) -> bool:
        return self.path is not None

    @property
    def cost(self) -> float:
        if self.path is None:
            return math.inf
        return path_cost(self.path)


def reconstruct(parents: dict, node) -> list[GridIndex]:
    out = [GridIndex(*node)]
    while parents[out[-1]] is not None:
        out.append(parents[out[-1]])
    return out[::-1]


def _check_endpoint(grid: OccupancyGrid, p, name: str) -> GridIndex:
    p = GridIndex(*map(int, p))
    if not grid.in_bounds(p):
        raise PlanningError(f"{name} {tuple(p)} is outside the grid")
    if not grid.is_free(p):
        raise PlanningError(f"{name} {tuple(p)} is occupied")
    return p


def _astar(grid, start, goal, moves, kind, prefer_descent=False) -> SearchResult:
    # Open-list order: lower f, then higher g, then lexicographic index.
    g = {start: 0.0}
    came: dict[GridIndex, Optional[GridIndex]] = {start: None}
    closed: dict[GridIndex, Optional[GridIndex]] = {}
    expanded: list[GridIndex] = []
    deferred: list[GridIndex] = []
    heap = [(heuristic_value(kind, start, goal), -0.0, start)]

    def relax(node, nbrs):
        for nb, c in nbrs:
            if nb in closed:
                continue
            ng = g[node] + c
            if ng < g.get(nb, math.inf):
                g[nb] = ng
                came[nb] = node
                heapq.heappush(heap, (ng + heuristic_value(kind, nb, goal), -ng, nb))

    while heap or deferred:
        if not heap:
            # Nodes whose sideways moves were skipped in favour of descending
            # get them back, so the search stays complete.
            for node in deferred:
                relax(node, neighbors(grid, node, moves))
            deferred = []
            continue
        f, neg_g, node = heapq.heappop(heap)
        if node in closed or -neg_g > g[node]:
            continue
        closed[node] = came[node]
        expanded.append(node)
        if node == goal:
            return SearchResult(reconstruct(closed, node), closed, expanded)
        below = GridIndex(node.x, node.y, node.z - 1)
        if prefer_descent and grid.can_descend(node) and below not in closed:
            relax(node, [(below, 1.0)])
            deferred.append(node)
            continue
        relax(node, neighbors(grid, node, moves))
    return SearchResult(None, closed, expanded)


def plan_2d(grid: OccupancyGrid, start, goal, cfg: SearchConfig = SearchConfig()) -> SearchResult:
    """A* on the ground plane. On failure ``path`` is None and ``parents`` holds the closed set."""
    start = _check_endpoint(grid, start, "start")
    goal = _check_endpoint(grid, goal, "goal")
    if start.z != 0 or goal.z != 0:
        raise PlanningError("2D search needs start and goal on the ground plane (z = 0)")
    return _astar(grid, start, goal, moves_2d(cfg.connectivity_2d), cfg.heuristic)


def plan_3d_landing(grid: OccupancyGrid, start, goal, cfg: SearchConfig = SearchConfig()) -> Optional[list[GridIndex]]:
    """3D A* that, whenever the expanded cell can drop one level, only queues the drop."""
    return plan_3d_search(grid, start, goal, cfg).path


def plan_3d_search(grid: OccupancyGrid, start, goal, cfg: SearchConfig = SearchConfig()) -> SearchResult:
    start = _check_endpoint(grid, start, "start")
    goal = _check_endpoint(grid, goal, "goal")
    return _astar(grid, start, goal, moves_3d(cfg.connectivity_3d), cfg.heuristic, prefer_descent=True)


def nearest_to_goal(explored: Iterable, goal) -> GridIndex:
    """Explored cell closest to ``goal`` (Euclidean); ties go to the smallest (x, y, z)."""
    best = None
    for p in explored:
        key = (sum((a - b) ** 2 for a, b in zip(p, goal)), tuple(p))
        if best is None or key < best:
            best = key
    if best is None:
        raise ValueError("explored set is empty")
    return GridIndex(*best[1])


@dataclass(frozen=True)
class ModalWaypoint:
    index: GridIndex
    mode: Mode
    transition: Transition = Transition.NONE


@dataclass
class ModalPath:
    waypoints: list[ModalWaypoint]

    def __len__(self):
        return len(self.waypoints)

    @property
    def cells(self) -> list[GridIndex]:
        return [w.index for w in self.waypoints]

    def count(self, mode: Mode | None = None, transition: Transition | None = None) -> int:
        return sum(
            1
            for w in self.waypoints
            if (mode is None or w.mode is mode) and (transition is None or w.transition is transition)
        )

    def dumps(self) -> str:
        lines = []
        for w in self.waypoints:
            parts = [str(w.index.x), str(w.index.y), str(w.index.z), w.mode.value]
            if w.transition is not Transition.NONE:
                parts.append(w.transition.value)
            lines.append(" ".join(parts))
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "ModalPath":
        wps = []
        for n, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) not in (4, 5):
                raise ValueError(f"line {n}: expected 'x y z MODE [TRANSITION]', got {line!r}")
            try:
                idx = GridIndex(*map(int, parts[:3]))
                mode = Mode(parts[3])
                tr = Transition(parts[4]) if len(parts) == 5 else Transition.NONE
            except ValueError as exc:
                raise ValueError(f"line {n}: {exc}") from None
            wps.append(ModalWaypoint(idx, mode, tr))
        return cls(wps)


def tag_modes(cells: list) -> ModalPath:
    wps = []
    prev = None
    for c in cells:
        c = GridIndex(*c)
        mode = Mode.AIR if c.z > 0 else Mode.GROUND
        tr = Transition.NONE
        if prev is Mode.GROUND and mode is Mode.AIR:
            tr = Transition.TAKEOFF
        elif prev is Mode.AIR and mode is Mode.GROUND:
            tr = Transition.LANDING
        wps.append(ModalWaypoint(c, mode, tr))
        prev = mode
    return ModalPath(wps)


def plan_bimodal(grid: OccupancyGrid, start, goal, cfg: SearchConfig = SearchConfig()) -> ModalPath:
    """Walk if the ground plane connects start and goal, otherwise walk-fly-walk."""
    try:
        s = grid.world_to_grid(start)
        t = grid.world_to_grid(goal)
    except OutOfGridError as exc:
        raise PlanningError(str(exc)) from None
    s = _check_endpoint(grid, s, "start")
    t = _check_endpoint(grid, t, "goal")

    handoff, prefix = s, [s]
    if s.z == 0 and t.z == 0:
        ground = plan_2d(grid, s, t, cfg)
        if ground.found:
            return tag_modes(ground.path)
        handoff = nearest_to_goal(ground.parents, t)
        prefix = reconstruct(ground.parents, handoff)

    aerial = plan_3d_landing(grid, handoff, t, cfg)
    if aerial is None:
        raise NoPathError(f"no ground or aerial path from {tuple(s)} to {tuple(t)}")
    return tag_modes(prefix + aerial[1:])


def path_to_world(path: ModalPath, grid: OccupancyGrid) -> list[tuple[WorldPoint, Mode]]:
    return [(grid.grid_to_world(w.index), w.mode) for w in path.waypoints]
