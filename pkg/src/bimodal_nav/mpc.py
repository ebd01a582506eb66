"""Receding-horizon step-length controller for the zigzag gait.

The body moves along one axis per full step: ``p(k+1) = p(k) + 2 * sign * u(k) * cos(theta0)``
(the sub-steps' sideways components cancel). The horizon cost

    J(u) = sum_k  Qx (x(k+1) - xr(k))^2 + Qy (y(k+1) - yr(k))^2 + R u(k)^2

is a convex quadratic in ``u`` over the box ``[a_min, a_max]^N``, solved by
projected coordinate descent followed by an exact solve on the free set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .kinematics import Axis, BodyState, LimbGeometry, max_step_length


class InfeasibleConfigError(ValueError):
    pass


@dataclass(frozen=True)
class MpcConfig:
    Q: tuple[float, float] = (3.0, 3.0)
    R: float = 0.2
    N: int = 3
    a_max: float = field(default_factory=lambda: max_step_length(LimbGeometry()))
    a_min: float = 0.0
    cost_tol: float = 1e-6
    max_iter: int = 100

    def __post_init__(self):
        object.__setattr__(self, "Q", tuple(float(q) for q in self.Q))
        if int(self.N) != self.N or self.N < 1:
            raise InfeasibleConfigError(f"horizon N must be a positive integer, got {self.N}")
        if not self.a_max > 0:
            raise InfeasibleConfigError(f"a_max must be positive, got {self.a_max}")
        if self.a_min != 0.0:
            raise InfeasibleConfigError("a_min is fixed at 0; direction comes from the axis sign")
        if len(self.Q) != 2 or min(self.Q) < 0:
            raise InfeasibleConfigError("Q must hold two non-negative weights")
        if not self.R > 0:
            raise InfeasibleConfigError("R must be positive")

    @classmethod
    def for_geometry(cls, geom: LimbGeometry, **kw) -> "MpcConfig":
        return cls(a_max=max_step_length(geom), **kw)


@dataclass(frozen=True)
class MpcProblem:
    x0: BodyState
    reference: tuple[tuple[float, float], ...]
    axis: Axis = Axis.X
    theta0: float = math.radians(45.0)
    sign: int = 1

    def __post_init__(self):
        object.__setattr__(self, "reference", tuple((float(r[0]), float(r[1])) for r in self.reference))
        object.__setattr__(self, "axis", Axis(self.axis))
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")


@dataclass(frozen=True)
class MpcSolution:
    u: tuple[float, ...]
    predicted: tuple[BodyState, ...]
    cost: float
    iterations: int


def predict(state: BodyState, u: float, axis: Axis, theta0: float, sign: int = 1, a_max: float | None = None) -> BodyState:
    if u < 0 or (a_max is not None and u > a_max + 1e-12):
        raise ValueError(f"step length {u} outside [0, {a_max}]")
    d = 2.0 * sign * u * math.cos(theta0)
    if Axis(axis) is Axis.X:
        return BodyState(state.x + d, state.y, state.k + 1)
    return BodyState(state.x, state.y + d, state.k + 1)


def stage_cost(state, ref, u: float, cfg: MpcConfig) -> float:
    qx, qy = cfg.Q
    return qx * (state[0] - ref[0]) ** 2 + qy * (state[1] - ref[1]) ** 2 + cfg.R * u * u


def rollout(problem: MpcProblem, u: Sequence[float]) -> list[BodyState]:
    out, s = [], problem.x0
    for uk in u:
        s = predict(s, uk, problem.axis, problem.theta0, problem.sign)
        out.append(s)
    return out


def horizon_cost(problem: MpcProblem, u: Sequence[float], cfg: MpcConfig) -> float:
    states = rollout(problem, u)
    return sum(stage_cost(s, r, uk, cfg) for s, r, uk in zip(states, problem.reference, u))


def _quadratic(problem: MpcProblem, cfg: MpcConfig):
    """Hessian H and linear term f with J(u) = u'Hu + 2f'u + const."""
    n = cfg.N
    ax = 0 if problem.axis is Axis.X else 1
    q = cfg.Q[ax]
    b = 2.0 * problem.sign * math.cos(problem.theta0)
    p0 = problem.x0[ax]
    r = np.array([ref[ax] for ref in problem.reference])
    L = np.tril(np.ones((n, n)))
    H = b * b * q * L.T @ L + cfg.R * np.eye(n)
    f = b * q * L.T @ (p0 - r)
    return H, f


def solve(problem: MpcProblem, cfg: MpcConfig) -> MpcSolution:
    if len(problem.reference) != cfg.N:
        raise ValueError(f"reference has {len(problem.reference)} stages, horizon is {cfg.N}")
    H, f = _quadratic(problem, cfg)
    lo, hi = cfg.a_min, cfg.a_max

    def qcost(u):
        return float(u @ H @ u + 2.0 * f @ u)

    u = np.zeros(cfg.N)
    prev = qcost(u)
    it = 0
    for it in range(1, cfg.max_iter + 1):
        for i in range(cfg.N):
            g = H[i] @ u + f[i]
            u[i] = min(hi, max(lo, u[i] - g / H[i, i]))
        cur = qcost(u)
        if prev - cur <= 1e-3 * cfg.cost_tol:
            break
        prev = cur

    # Polish: exact minimiser on the free coordinates with the bound ones held.
    free = (u > lo + 1e-12) & (u < hi - 1e-12)
    if free.any():
        cand = u.copy()
        fixed = ~free
        rhs = -(f[free] + H[np.ix_(free, fixed)] @ u[fixed])
        cand[free] = np.linalg.solve(H[np.ix_(free, free)], rhs)
        cand = np.clip(cand, lo, hi)
        if qcost(cand) <= qcost(u):
            u = cand

    u_t = tuple(float(v) for v in u)
    return MpcSolution(u_t, tuple(rollout(problem, u_t)), horizon_cost(problem, u_t, cfg), it)


def select_axis(state, target) -> tuple[Axis, int]:
    """Axis with the larger absolute position error and the sign of that error; ties pick X."""
    ex = target[0] - state[0]
    ey = target[1] - state[1]
    if abs(ex) >= abs(ey):
        return Axis.X, 1 if ex >= 0 else -1
    return Axis.Y, 1 if ey >= 0 else -1
