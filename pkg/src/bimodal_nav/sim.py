"""Kinematic execution harness: closed-loop MPC walking, open-loop replay,
idealised flight between air waypoints, and tracking-error metrics.

Log time ``t`` counts sub-steps: a full step k starts at t = 2k, its first
sub-step ends at t = 2k + 1 (SUBSTEP record) and the step ends at t = 2k + 2
(FULLSTEP record).
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .grid_map import OccupancyGrid
from .kinematics import (
    Axis,
    BodyState,
    LimbGeometry,
    LimbTarget,
    decompose_step,
    inverse_kinematics,
    max_step_length,
)
from .mpc import MpcConfig, MpcProblem, select_axis, solve
from .planner import Mode, ModalPath, SearchConfig, Transition, path_to_world, plan_bimodal

# Output of `calibrate-noise` for a 9.77 cm mean open-loop RMSE on the 3.6 m
# line over seeds 0..99 (default geometry and weights). Calibration, not measured data.
CALIBRATED_HEADING_BIAS = 0.06479
CALIBRATED_HEADING_NOISE = 0.0
CALIBRATED_STEP_LENGTH_NOISE = 0.05


class Granularity(str, Enum):
    SUBSTEP = "SUBSTEP"
    FULLSTEP = "FULLSTEP"


@dataclass(frozen=True)
class DisturbanceModel:
    """Seeded step perturbation: a heading offset (per-run bias plus per-step
    noise, radians) and a relative step-length error."""

    seed: int = 0
    step_length_noise: float = CALIBRATED_STEP_LENGTH_NOISE
    heading_noise: float = CALIBRATED_HEADING_NOISE
    heading_bias: float = CALIBRATED_HEADING_BIAS
    enabled: bool = True

    def __post_init__(self):
        if min(self.step_length_noise, self.heading_noise, self.heading_bias) < 0:
            raise ValueError("noise sigmas must be non-negative")

    def _rng(self, *key: int) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence(int(self.seed) & (2**64 - 1), spawn_key=key))

    def bias(self) -> float:
        if not self.enabled:
            return 0.0
        return self.heading_bias * float(self._rng(1).standard_normal())

    def draws(self, index: int) -> tuple[float, float]:
        """(heading error, relative length error) for step ``index``."""
        if not self.enabled:
            return 0.0, 0.0
        z = self._rng(0, int(index)).standard_normal(2)
        return self.bias() + self.heading_noise * float(z[0]), self.step_length_noise * float(z[1])

    def scaled(self, factor: float) -> "DisturbanceModel":
        return replace(self, heading_bias=self.heading_bias * factor, heading_noise=self.heading_noise * factor)


def apply_disturbance(model: DisturbanceModel, nominal, index: int) -> np.ndarray:
    nominal = np.asarray(nominal, dtype=float)
    if not model.enabled:
        return nominal.copy()
    dh, dl = model.draws(index)
    c, s = math.cos(dh), math.sin(dh)
    return np.array([c * nominal[0] - s * nominal[1], s * nominal[0] + c * nominal[1]]) * (1.0 + dl)


# ---------------------------------------------------------------- polylines


class Polyline:
    """Piecewise-linear reference path in the plane (or in 3D for flight)."""

    def __init__(self, points):
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or len(pts) == 0:
            raise ValueError("polyline needs at least one point")
        keep = [0] + [i for i in range(1, len(pts)) if np.any(pts[i] != pts[i - 1])]
        self.points = pts[keep]
        seg = np.diff(self.points, axis=0)
        self.seg_len = np.linalg.norm(seg, axis=1)
        self.cum = np.concatenate([[0.0], np.cumsum(self.seg_len)])

    @property
    def length(self) -> float:
        return float(self.cum[-1])

    @property
    def end(self) -> np.ndarray:
        return self.points[-1]

    def point_at(self, s: float) -> np.ndarray:
        if len(self.points) == 1:
            return self.points[0].copy()
        s = min(max(s, 0.0), self.length)
        i = min(int(np.searchsorted(self.cum, s, side="right")) - 1, len(self.seg_len) - 1)
        t = (s - self.cum[i]) / self.seg_len[i]
        return self.points[i] + t * (self.points[i + 1] - self.points[i])

    def project(self, p, s_min: float = 0.0) -> tuple[float, np.ndarray, float]:
        """Closest point at arc length >= s_min: (arc length, point, distance)."""
        p = np.asarray(p, dtype=float)[: self.points.shape[1]]
        if len(self.points) == 1:
            return 0.0, self.points[0].copy(), float(np.linalg.norm(p - self.points[0]))
        best = None
        for i, ln in enumerate(self.seg_len):
            if self.cum[i + 1] < s_min:
                continue
            a, b = self.points[i], self.points[i + 1]
            t = float(np.clip(np.dot(p - a, b - a) / (ln * ln), 0.0, 1.0))
            s = self.cum[i] + t * ln
            if s < s_min:
                t, s = (s_min - self.cum[i]) / ln, s_min
            q = a + t * (b - a)
            d = float(np.linalg.norm(p - q))
            if best is None or d < best[2] - 1e-15:
                best = (float(s), q, d)
        return best

    def direction_at(self, s: float) -> np.ndarray:
        """Unit tangent of the segment containing arc length ``s`` (zeros for a single point)."""
        if len(self.points) == 1:
            return np.zeros(self.points.shape[1])
        s = min(max(s, 0.0), self.length)
        i = min(int(np.searchsorted(self.cum, s, side="right")) - 1, len(self.seg_len) - 1)
        return (self.points[i + 1] - self.points[i]) / self.seg_len[i]

    def distance(self, p) -> float:
        return self.project(p)[2]


# ---------------------------------------------------------------- logs


@dataclass(frozen=True)
class LogRecord:
    t: int
    ref: tuple[float, float, float]
    act: tuple[float, float, float]
    mode: Mode
    granularity: Granularity


_LOG_COLUMNS = ["t", "ref_x", "ref_y", "ref_z", "act_x", "act_y", "act_z", "mode", "granularity"]


@dataclass
class TrajectoryLog:
    records: list[LogRecord] = field(default_factory=list)
    converged: bool = True
    mpc_trace: list[dict] = field(default_factory=list)
    joints: list[dict] = field(default_factory=list)
    steps: list[float] = field(default_factory=list)  # commanded step length per full step

    def __len__(self):
        return len(self.records)

    def select(self, granularity: Granularity | None = None, mode: Mode | None = None) -> list[LogRecord]:
        """FULLSTEP keeps step boundaries; SUBSTEP keeps every sub-step boundary."""
        out = self.records
        if granularity is Granularity.FULLSTEP:
            out = [r for r in out if r.granularity is Granularity.FULLSTEP]
        if mode is not None:
            out = [r for r in out if r.mode is mode]
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(_LOG_COLUMNS)
        for r in self.records:
            w.writerow([r.t, *map(repr, r.ref), *map(repr, r.act), r.mode.value, r.granularity.value])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "TrajectoryLog":
        rows = list(csv.DictReader(io.StringIO(text)))
        recs = [
            LogRecord(
                int(r["t"]),
                (float(r["ref_x"]), float(r["ref_y"]), float(r["ref_z"])),
                (float(r["act_x"]), float(r["act_y"]), float(r["act_z"])),
                Mode(r["mode"]),
                Granularity(r["granularity"]),
            )
            for r in rows
        ]
        return cls(recs)

    def trace_csv(self) -> str:
        if not self.mpc_trace:
            return ""
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(self.mpc_trace[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(self.mpc_trace)
        return buf.getvalue()

    def joints_csv(self) -> str:
        buf = io.StringIO()
        cols = ["step_index", "substep", "limb_id", "theta0_rad", "theta1_rad", "theta2_rad"]
        w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
        w.writeheader()
        w.writerows(self.joints)
        return buf.getvalue()


@dataclass(frozen=True)
class ErrorReport:
    rmse: float
    max_error: float
    improvement_pct: Optional[float] = None
    max_error_improvement_pct: Optional[float] = None

    def to_json(self) -> str:
        return json.dumps(
            {
                "rmse_m": self.rmse,
                "max_error_m": self.max_error,
                "improvement_pct": self.improvement_pct,
                "max_error_improvement_pct": self.max_error_improvement_pct,
            },
            indent=2,
            sort_keys=True,
        ) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ErrorReport":
        d = json.loads(text)
        return cls(d["rmse_m"], d["max_error_m"], d.get("improvement_pct"), d.get("max_error_improvement_pct"))


def improvement(baseline: float, value: float) -> float:
    return 100.0 * (baseline - value) / baseline


def report_from_errors(errors: Sequence[float], baseline: ErrorReport | None = None) -> ErrorReport:
    e = np.asarray(errors, dtype=float)
    if e.size == 0:
        raise ValueError("no records to evaluate")
    rmse = float(np.sqrt(np.mean(e * e)))
    mx = float(np.max(e))
    if baseline is None:
        return ErrorReport(rmse, mx)
    return ErrorReport(rmse, mx, improvement(baseline.rmse, rmse), improvement(baseline.max_error, mx))


def compute_errors(
    log: TrajectoryLog,
    granularity: Granularity = Granularity.FULLSTEP,
    baseline: ErrorReport | None = None,
    polyline: Polyline | None = None,
    mode: Mode | None = None,
) -> ErrorReport:
    """RMSE and max of the distance from each actual position to the reference path.

    Without ``polyline`` the logged reference point (the foot of the
    perpendicular recorded at run time) is used.
    """
    recs = log.select(granularity, mode)
    if polyline is None:
        errs = [math.dist(r.act, r.ref) for r in recs]
    else:
        dim = polyline.points.shape[1]
        errs = [polyline.distance(r.act[:dim]) for r in recs]
    return report_from_errors(errs, baseline)


# ---------------------------------------------------------------- runs


@dataclass(frozen=True)
class FollowConfig:
    theta0: float = math.radians(45.0)
    goal_tolerance: float = 0.01
    budget_factor: float = 4.0
    lookahead: float = 1.0  # stage spacing in units of a maximal full step
    axis_deadband: float = 0.005  # sideways error tolerated before a correction step
    log_joints: bool = False

    def __post_init__(self):
        if self.goal_tolerance <= 0 or self.lookahead <= 0 or self.axis_deadband <= 0 or self.budget_factor <= 0:
            raise ValueError("follow parameters must be positive")


def nominal_step_count(path: Polyline, geom: LimbGeometry, cfg: FollowConfig) -> int:
    return max(1, len(nominal_steps(path, geom, cfg.theta0)))


class _Recorder:
    def __init__(self, log: TrajectoryLog, t0: int, z: float, mode: Mode):
        self.log, self.t, self.z, self.mode = log, t0, z, mode

    def add(self, ref, act, gran: Granularity, dt: int = 1):
        self.t += dt
        self.log.records.append(
            LogRecord(self.t, (float(ref[0]), float(ref[1]), self.z), (float(act[0]), float(act[1]), self.z), self.mode, gran)
        )


def _execute_step(pos, a, axis, sign, theta0, dist, index, path, rec, s_min=0.0):
    """Apply one full step through its two sub-steps; both get the step's disturbance."""
    sub1, sub2, _ = decompose_step(BodyState(0.0, 0.0), a, theta0, axis, sign)
    p1 = pos + apply_disturbance(dist, sub1.displacement, index)
    p2 = p1 + apply_disturbance(dist, sub2.displacement, index)
    rec.add(path.project(p1)[1], p1, Granularity.SUBSTEP)
    rec.add(path.project(p2)[1], p2, Granularity.FULLSTEP)
    return p2, (sub1, sub2)


def _joint_rows(geom, a, k, subs, check_limits=True):
    rows = []
    center = max_step_length(geom) / 2.0
    front, back = LimbTarget(center + a / 2.0, -geom.body_height), LimbTarget(center - a / 2.0, -geom.body_height)
    limbs = ("front_left", "front_right", "rear_left", "rear_right")
    for j, sub in enumerate(subs, start=1):
        for limb in limbs:
            tgt = front if limb in sub.limbs else back
            ang = inverse_kinematics(geom, tgt, 0.0, check_limits)
            rows.append(
                {"step_index": k, "substep": j, "limb_id": limb, "theta0_rad": repr(ang.theta0), "theta1_rad": repr(ang.theta1), "theta2_rad": repr(ang.theta2)}
            )
    return rows


def run_closed_loop(
    path,
    geom: LimbGeometry = LimbGeometry(),
    mpc_cfg: MpcConfig | None = None,
    disturbance: DisturbanceModel = DisturbanceModel(enabled=False),
    follow: FollowConfig = FollowConfig(),
    start=None,
    log: TrajectoryLog | None = None,
    t0: int = 0,
    z: float = 0.0,
) -> TrajectoryLog:
    """Walk ``path`` with the MPC choosing each step length.

    Each full step: project onto the path, pick the axis against a target
    ``axis_deadband`` ahead of the projection, solve the horizon problem and
    execute u*(0). When the chosen axis/sign follows the path, stage
    references are spaced one maximal step apart along it; otherwise every
    stage references the target, which pulls the body back onto the path.
    """
    path = path if isinstance(path, Polyline) else Polyline(np.asarray(path, dtype=float)[:, :2])
    mpc_cfg = mpc_cfg or MpcConfig.for_geometry(geom)
    log = log if log is not None else TrajectoryLog()
    rec = _Recorder(log, t0 - 2, z, Mode.GROUND)
    pos = np.array(path.points[0] if start is None else start[:2], dtype=float)
    rec.add(path.project(pos)[1], pos, Granularity.FULLSTEP, dt=2)

    stride = 2.0 * mpc_cfg.a_max * math.cos(follow.theta0) * follow.lookahead
    budget = max(1, math.ceil(follow.budget_factor * nominal_step_count(path, geom, follow)))
    s_prog = 0.0
    log.converged = False
    for k in range(budget + 1):
        if np.linalg.norm(pos - path.end) <= follow.goal_tolerance:
            log.converged = True
            break
        if k == budget:
            break
        s_prog, _, _ = path.project(pos, s_min=s_prog)
        s_tgt = s_prog + follow.axis_deadband
        target = path.point_at(s_tgt)
        axis, sign = select_axis(pos, target)
        ax_i = 0 if axis is Axis.X else 1
        if sign * path.direction_at(s_tgt)[ax_i] > 1e-9:
            # Progress along the path: stages one stride apart.
            refs = tuple(tuple(path.point_at(s_prog + (i + 1) * stride)) for i in range(mpc_cfg.N))
        else:
            # Sideways correction (or final approach to a point): hold the target.
            refs = (tuple(target),) * mpc_cfg.N
        sol = solve(MpcProblem(BodyState(pos[0], pos[1], k), refs, axis, follow.theta0, sign), mpc_cfg)
        a = sol.u[0]
        trace = {"step_index": k, "axis": axis.value, "sign": sign}
        trace.update({f"u{i}": repr(u) for i, u in enumerate(sol.u)})
        trace.update({"cost": repr(sol.cost), "x": repr(float(pos[0])), "y": repr(float(pos[1])), "ref_x": repr(refs[0][0]), "ref_y": repr(refs[0][1])})
        log.mpc_trace.append(trace)
        log.steps.append(a)
        pos, subs = _execute_step(pos, a, axis, sign, follow.theta0, disturbance, k, path, rec)
        if follow.log_joints:
            log.joints.extend(_joint_rows(geom, a, k, subs))
    return log


def nominal_steps(path: Polyline, geom: LimbGeometry, theta0: float) -> list[tuple[float, Axis, int]]:
    """Fixed (step length, axis, sign) plan: maximal steps, shortened at each segment end.

    Segments not aligned with an axis are walked as a staircase of X then Y steps.
    """
    a_max = max_step_length(geom)
    d = 2.0 * a_max * math.cos(theta0)
    plan = []
    for a_pt, b_pt in zip(path.points, path.points[1:]):
        delta = b_pt[:2] - a_pt[:2]
        n = max(1, math.ceil(float(np.max(np.abs(delta))) / d - 1e-9))
        piece = delta / n
        for _ in range(n):
            for ax_i, axis in ((0, Axis.X), (1, Axis.Y)):
                if abs(piece[ax_i]) > 1e-12:
                    plan.append((abs(piece[ax_i]) / (2.0 * math.cos(theta0)), axis, 1 if piece[ax_i] > 0 else -1))
    return plan


def run_open_loop(
    path,
    geom: LimbGeometry = LimbGeometry(),
    disturbance: DisturbanceModel = DisturbanceModel(enabled=False),
    theta0: float = math.radians(45.0),
) -> TrajectoryLog:
    """Replay the nominal step plan with no feedback; deviations persist."""
    path = path if isinstance(path, Polyline) else Polyline(np.asarray(path, dtype=float)[:, :2])
    log = TrajectoryLog()
    rec = _Recorder(log, -2, 0.0, Mode.GROUND)
    pos = np.array(path.points[0], dtype=float)
    rec.add(path.project(pos)[1], pos, Granularity.FULLSTEP, dt=2)
    if path.length > 0:
        for k, (a, axis, sign) in enumerate(nominal_steps(path, geom, theta0)):
            log.steps.append(a)
            pos, _ = _execute_step(pos, a, axis, sign, theta0, disturbance, k, path, rec)
    return log


def straight_line(length: float, axis: Axis = Axis.X) -> Polyline:
    end = (length, 0.0) if Axis(axis) is Axis.X else (0.0, length)
    return Polyline([(0.0, 0.0), end])


# ---------------------------------------------------------------- missions


@dataclass
class MissionResult:
    path: ModalPath
    log: TrajectoryLog
    segments: list[tuple[Mode, np.ndarray]]


def _segments(points: list[tuple]) -> list[tuple[Mode, np.ndarray]]:
    """Split waypoints into alternating ground / air runs. Air runs include the
    take-off and landing ground points so flight starts and ends on the ground."""
    segs: list[tuple[Mode, list]] = []
    for i, (p, mode) in enumerate(points):
        if not segs or segs[-1][0] is not mode:
            if mode is Mode.AIR and segs:
                segs.append((Mode.AIR, [segs[-1][1][-1]]))
            elif mode is Mode.GROUND and segs and segs[-1][0] is Mode.AIR:
                segs[-1][1].append(p)
                segs.append((Mode.GROUND, []))
            else:
                segs.append((mode, []))
        segs[-1][1].append(p)
    return [(m, np.array(pts, dtype=float)) for m, pts in segs if len(pts)]


def _fly(log: TrajectoryLog, pts: np.ndarray, start: np.ndarray, t0: int, air_step: float) -> tuple[np.ndarray, int]:
    """Constant-speed, exact flight through the given 3D points."""
    route = Polyline(np.vstack([start[None, :], pts]))
    n = max(1, math.ceil(route.length / air_step - 1e-9))
    t = t0
    for i in range(1, n + 1):
        p = route.point_at(route.length * i / n)
        t += 2
        log.records.append(LogRecord(t, tuple(map(float, p)), tuple(map(float, p)), Mode.AIR, Granularity.FULLSTEP))
    return route.end.copy(), t


def run_mission(
    grid: OccupancyGrid,
    start,
    goal,
    geom: LimbGeometry = LimbGeometry(),
    mpc_cfg: MpcConfig | None = None,
    disturbance: DisturbanceModel = DisturbanceModel(enabled=False),
    search: SearchConfig = SearchConfig(),
    follow: FollowConfig = FollowConfig(),
    air_step: float = 0.1,
) -> MissionResult:
    """Plan with the bi-modal planner, walk ground runs closed-loop, fly air runs exactly."""
    mpc_cfg = mpc_cfg or MpcConfig.for_geometry(geom)
    mp = plan_bimodal(grid, start, goal, search)
    world = [(tuple(p), m) for p, m in path_to_world(mp, grid)]
    segs = _segments(world)
    log = TrajectoryLog()
    pos = np.array(world[0][0], dtype=float)
    t = -2
    for mode, pts in segs:
        if mode is Mode.GROUND:
            z = float(pts[0][2])
            ok = log.converged
            run_closed_loop(
                Polyline(pts[:, :2]), geom, mpc_cfg, disturbance, follow,
                start=pos[:2], log=log, t0=t + 2, z=z,
            )
            log.converged = ok and log.converged
            t = log.records[-1].t
            last = log.records[-1].act
            pos = np.array(last, dtype=float)
        else:
            pos, t = _fly(log, pts[1:], pos, t, air_step)
    return MissionResult(mp, log, segs)


# ---------------------------------------------------------------- calibration


def open_loop_rmse(disturbance: DisturbanceModel, seeds: Sequence[int], path: Polyline, geom: LimbGeometry, theta0: float) -> float:
    vals = [
        compute_errors(run_open_loop(path, geom, replace(disturbance, seed=s), theta0), Granularity.FULLSTEP).rmse
        for s in seeds
    ]
    return float(np.mean(vals))


def calibrate_noise(
    target_rmse: float = 0.0977,
    seeds: Sequence[int] = range(100),
    path: Polyline | None = None,
    geom: LimbGeometry = LimbGeometry(),
    base: DisturbanceModel = DisturbanceModel(),
    theta0: float = math.radians(45.0),
) -> DisturbanceModel:
    """Scale the heading sigmas of ``base`` so the mean open-loop RMSE hits ``target_rmse``."""
    from scipy.optimize import brentq

    path = path or straight_line(3.6)
    base = replace(base, enabled=True)
    if base.heading_bias == 0 and base.heading_noise == 0:
        raise ValueError("base model has no heading noise to scale")

    def resid(f):
        return open_loop_rmse(base.scaled(f), seeds, path, geom, theta0) - target_rmse

    hi = 1.0
    while resid(hi) < 0:
        hi *= 2.0
        if hi > 1e6:
            raise RuntimeError("target RMSE unreachable by scaling heading noise")
    f = brentq(resid, 0.0, hi, xtol=1e-10)
    return base.scaled(f)
