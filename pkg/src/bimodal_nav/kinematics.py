"""Two-link limb kinematics and the zigzag canter-gait motion model.

Angles are radians. In a limb's sagittal plane ``x2`` is the horizontal reach
from the hip and ``z2`` the vertical offset (negative below the hip). The
knee only bends to the negative side (theta2 <= 0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np

CLAMP_TOL = 1e-12


class UnreachableError(ValueError):
    pass


class JointLimitError(ValueError):
    pass


class GeometryError(ValueError):
    pass


class Axis(str, Enum):
    X = "X"
    Y = "Y"


@dataclass(frozen=True)
class LimbGeometry:
    femur_length: float = 0.154
    tibia_length: float = 0.206
    body_height: float = 0.31
    shoulder_yaw_limits: tuple[float, float] = (math.radians(-35.0), math.radians(35.0))
    hip_pitch_limits: tuple[float, float] = (math.radians(-90.0), 0.0)
    knee_pitch_limits: tuple[float, float] = (math.radians(-90.0), 0.0)

    def __post_init__(self):
        if min(self.femur_length, self.tibia_length, self.body_height) <= 0:
            raise GeometryError("limb lengths and body height must be positive")
        if self.body_height >= self.femur_length + self.tibia_length:
            raise GeometryError("body height must be below full limb extension")

    @property
    def reach(self) -> float:
        return self.femur_length + self.tibia_length

    def in_annulus(self, x2: float, z2: float, tol: float = 1e-12) -> bool:
        lf, lt = self.femur_length, self.tibia_length
        r2 = x2 * x2 + z2 * z2
        return (lf - lt) ** 2 - tol <= r2 <= (lf + lt) ** 2 + tol


class JointAngles(NamedTuple):
    theta0: float
    theta1: float
    theta2: float


class LimbTarget(NamedTuple):
    x2: float
    z2: float


def forward_kinematics(geom: LimbGeometry, angles: JointAngles) -> LimbTarget:
    lf, lt = geom.femur_length, geom.tibia_length
    t1, t2 = angles.theta1, angles.theta2
    return LimbTarget(lf * math.cos(t1) + lt * math.cos(t1 + t2), lf * math.sin(t1) + lt * math.sin(t1 + t2))


def inverse_kinematics(geom: LimbGeometry, target: LimbTarget, theta0: float = 0.0, check_limits: bool = True) -> JointAngles:
    lf, lt = geom.femur_length, geom.tibia_length
    x2, z2 = target
    c2 = (x2 * x2 + z2 * z2 - lf * lf - lt * lt) / (2.0 * lf * lt)
    if abs(c2) > 1.0 + CLAMP_TOL:
        raise UnreachableError(f"target ({x2:.6g}, {z2:.6g}) lies outside the reachable annulus")
    c2 = min(1.0, max(-1.0, c2))
    t2 = -math.acos(c2)
    t1 = math.atan2(z2, x2) - math.atan2(lt * math.sin(t2), lf + lt * math.cos(t2))
    angles = JointAngles(theta0, t1, t2)
    if check_limits:
        check_joint_limits(geom, angles)
    return angles


def check_joint_limits(geom: LimbGeometry, angles: JointAngles, tol: float = 1e-9) -> None:
    for name, value, (lo, hi) in (
        ("theta0", angles.theta0, geom.shoulder_yaw_limits),
        ("theta1", angles.theta1, geom.hip_pitch_limits),
        ("theta2", angles.theta2, geom.knee_pitch_limits),
    ):
        if not lo - tol <= value <= hi + tol:
            raise JointLimitError(f"{name}={math.degrees(value):.3f} deg outside [{math.degrees(lo):.1f}, {math.degrees(hi):.1f}]")


def max_step_length(geom: LimbGeometry) -> float:
    """Longest foot stroke at the nominal body height: sqrt((lF + lT)^2 - H^2)."""
    reach = geom.femur_length + geom.tibia_length
    if geom.body_height >= reach:
        raise GeometryError("body height must be below full limb extension")
    return math.sqrt(reach * reach - geom.body_height * geom.body_height)


@dataclass(frozen=True)
class StepTrajectory:
    samples: tuple[LimbTarget, ...]
    step_length: float
    step_height: float
    n_stance: int  # samples[:n_stance] make up the flat ground stroke

    @property
    def stance(self) -> tuple[LimbTarget, ...]:
        return self.samples[: self.n_stance]

    @property
    def swing(self) -> tuple[LimbTarget, ...]:
        return self.samples[self.n_stance :]


def gait_step_trajectory(
    geom: LimbGeometry,
    a: float,
    step_height: float = 0.05,
    n_samples: int = 32,
    spiral_start_ratio: float = 0.25,
) -> StepTrajectory:
    """Closed foot path: flat stroke of length ``a`` at z = -H, then a raised return arc.

    The return arc is an Archimedes spiral r = r0 + c*phi, phi in [0, pi], with its
    pole on the ground line, r0 = spiral_start_ratio * a and c fixed so the arc
    lands on the far stroke end. The arc is scaled vertically to peak at
    ``step_height`` above the ground line. The stroke is centred at a_max / 2 so
    the longest admissible stroke spans [0, a_max].
    """
    a_max = max_step_length(geom)
    if not 0.0 < a <= a_max + 1e-12:
        raise UnreachableError(f"step length {a} outside (0, {a_max:.6f}]")
    if step_height <= 0:
        raise ValueError("step_height must be positive")
    if n_samples < 4:
        raise ValueError("need at least 4 samples (two per stroke and two per arc)")
    if not 0.0 < spiral_start_ratio < 0.5:
        raise ValueError("spiral_start_ratio must lie in (0, 0.5)")

    H = geom.body_height
    center = a_max / 2.0
    front, back = center + a / 2.0, center - a / 2.0
    n_stance = n_samples // 2
    n_swing = n_samples - n_stance

    # Stance: foot slides front -> back while the body moves forward.
    stance = [LimbTarget(float(x), -H) for x in np.linspace(front, back, n_stance)]

    r0 = spiral_start_ratio * a
    c = (a - 2.0 * r0) / math.pi
    pole = back + r0 + c * math.pi  # phi = pi lands on `back`, phi = 0 on `front`
    phi_dense = np.linspace(0.0, math.pi, 721)
    peak = float(np.max((r0 + c * phi_dense) * np.sin(phi_dense)))
    scale = step_height / peak
    # Swing runs back -> front, i.e. phi from pi down to 0, endpoints excluded.
    phi = np.linspace(math.pi, 0.0, n_swing + 2)[1:-1]
    r = r0 + c * phi
    swing = [LimbTarget(float(pole + ri * math.cos(p)), float(-H + scale * ri * math.sin(p))) for ri, p in zip(r, phi)]

    samples = tuple(stance + swing)
    for s in samples:
        if not geom.in_annulus(*s):
            raise UnreachableError(f"trajectory sample ({s.x2:.4f}, {s.z2:.4f}) is unreachable")
    return StepTrajectory(samples, a, step_height, n_stance)


class SubStep(NamedTuple):
    displacement: tuple[float, float]
    limbs: tuple[str, str]


class BodyState(NamedTuple):
    x: float
    y: float
    k: int = 0


# Diagonal limb pairs that swing together, per axis and sub-step.
_PAIRS = {
    Axis.X: (("front_left", "rear_right"), ("front_right", "rear_left")),
    Axis.Y: (("front_right", "rear_left"), ("front_left", "rear_right")),
}


def decompose_step(
    state: BodyState,
    a: float,
    theta0: float,
    axis: Axis,
    sign: int = 1,
    a_max: float | None = None,
) -> tuple[SubStep, SubStep, BodyState]:
    """Split one full step of length ``a`` into its two zigzag sub-steps.

    ``sign`` = -1 walks backwards along ``axis``; the limb pairs swap order.
    """
    if a < 0 or (a_max is not None and a > a_max + 1e-12):
        raise ValueError(f"step length {a} out of bounds")
    axis = Axis(axis)
    along = sign * a * math.cos(theta0)
    side = a * math.sin(theta0)
    if axis is Axis.X:
        d1, d2 = (along, side), (along, -side)
    else:
        d1, d2 = (side, along), (-side, along)
    p1, p2 = _PAIRS[axis] if sign >= 0 else _PAIRS[axis][::-1]
    nxt = BodyState(state.x + d1[0] + d2[0], state.y + d1[1] + d2[1], state.k + 1)
    return SubStep(d1, p1), SubStep(d2, p2), nxt
