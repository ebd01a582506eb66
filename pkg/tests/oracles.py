"""Independent reference solutions used only by the tests."""

import math
from collections import deque

import networkx as nx
import numpy as np


def ground_graph(grid, eight=True):
    """Weighted graph of free z = 0 cells; diagonals need both side cells free."""
    nx_, ny_, _ = grid.dims
    G = nx.Graph()
    free = {(x, y) for x in range(nx_) for y in range(ny_) if grid.is_free((x, y, 0))}
    G.add_nodes_from(free)
    for x, y in free:
        for dx, dy in ((1, 0), (0, 1)):
            if (x + dx, y + dy) in free:
                G.add_edge((x, y), (x + dx, y + dy), weight=1.0)
        if eight:
            for dx, dy in ((1, 1), (1, -1)):
                if (x + dx, y + dy) in free and (x + dx, y) in free and (x, y + dy) in free:
                    G.add_edge((x, y), (x + dx, y + dy), weight=math.sqrt(2.0))
    return G


def dijkstra_cost(grid, start, goal, eight=True):
    G = ground_graph(grid, eight)
    try:
        return nx.dijkstra_path_length(G, tuple(start[:2]), tuple(goal[:2]))
    except nx.NetworkXNoPath:
        return None


def dijkstra_distances(grid, goal, eight=True):
    G = ground_graph(grid, eight)
    return nx.single_source_dijkstra_path_length(G, tuple(goal[:2]))


def bfs_reachable(grid, start, goal, max_z):
    """Six-connected reachability restricted to z <= max_z."""
    seen = {tuple(start)}
    q = deque([tuple(start)])
    while q:
        x, y, z = q.popleft()
        if (x, y, z) == tuple(goal):
            return True
        for d in ((1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)):
            n = (x + d[0], y + d[1], z + d[2])
            if n[2] <= max_z and n not in seen and grid.is_free(n):
                seen.add(n)
                q.append(n)
    return False


def mpc_cost_grid(x0, refs, axis, theta0, sign, Q, R, U):
    """Horizon cost for an array U of shape (..., N), evaluated by rolling the
    position forward one full step at a time."""
    ax = 0 if axis == "X" else 1
    p = np.full(U.shape[:-1], float(x0[ax]))
    other = float(x0[1 - ax])
    total = np.zeros(U.shape[:-1])
    for k in range(U.shape[-1]):
        p = p + 2.0 * sign * U[..., k] * math.cos(theta0)
        total += Q[ax] * (p - refs[k][ax]) ** 2 + Q[1 - ax] * (other - refs[k][1 - ax]) ** 2 + R * U[..., k] ** 2
    return total


def _search_box(cost, centre, half, step, a_max):
    axes = [np.arange(max(0.0, c - half), min(a_max, c + half) + step / 2, step) for c in centre]
    axes = [np.unique(np.clip(np.append(a, [max(0.0, c - half), min(a_max, c + half)]), 0.0, a_max)) for a, c in zip(axes, centre)]
    best = (math.inf, None)
    for u0 in axes[0]:
        g1, g2 = np.meshgrid(axes[1], axes[2], indexing="ij")
        U = np.stack([np.full_like(g1, u0), g1, g2], axis=-1)
        c = cost(U)
        i = np.unravel_index(np.argmin(c), c.shape)
        if c[i] < best[0]:
            best = (float(c[i]), (float(u0), float(g1[i]), float(g2[i])))
    return best


def mpc_grid_search(x0, refs, axis, theta0, sign, Q, R, a_max):
    """Exhaustive search over [0, a_max]^3: a 1 mm scan of the whole box, a
    1e-4 m scan around its best cell, then one 1e-5 m refinement pass."""
    def cost(U):
        return mpc_cost_grid(x0, refs, axis, theta0, sign, Q, R, U)

    c, u = _search_box(cost, (a_max / 2,) * 3, a_max / 2 + 1e-3, 1e-3, a_max)
    c, u = _search_box(cost, u, 5e-3, 1e-4, a_max)
    c, u = _search_box(cost, u, 3e-4, 1e-5, a_max)
    return c, u
