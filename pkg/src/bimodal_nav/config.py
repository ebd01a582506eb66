"""Mission configuration: YAML in, fully-resolved YAML manifest out.

All keys are optional; missing values fall back to the default limb
geometry and controller weights. Lengths are metres, angles degrees.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import yaml

from .kinematics import LimbGeometry, max_step_length
from .mpc import MpcConfig
from .planner import SearchConfig
from .sim import DisturbanceModel, FollowConfig


class ConfigError(ValueError):
    pass


_SECTIONS = {
    "geometry": {"femur_length", "tibia_length", "body_height"},
    "mpc": {"Qx", "Qy", "R", "N"},
    "disturbance": {"enabled", "step_length_noise", "heading_noise", "heading_bias"},
    "search": {"connectivity_2d", "connectivity_3d", "heuristic"},
    "follow": {"theta0_deg", "goal_tolerance", "lookahead", "axis_deadband", "budget_factor"},
}
_TOP = {"grid", "grid_sha256", "start", "goal", "seed", "out_dir", "air_step", *_SECTIONS}


@dataclass
class MissionConfig:
    grid: Optional[Path] = None
    start: Optional[tuple[float, float, float]] = None
    goal: Optional[tuple[float, float, float]] = None
    seed: int = 0
    out_dir: Path = Path("out")
    air_step: float = 0.1
    geometry: LimbGeometry = field(default_factory=LimbGeometry)
    mpc: MpcConfig = field(default_factory=MpcConfig)
    disturbance: DisturbanceModel = field(default_factory=DisturbanceModel)
    search: SearchConfig = field(default_factory=SearchConfig)
    follow: FollowConfig = field(default_factory=FollowConfig)

    @classmethod
    def from_dict(cls, d: dict[str, Any] | None, base_dir: Path = Path(".")) -> "MissionConfig":
        d = dict(d or {})
        unknown = set(d) - _TOP
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        for sec, keys in _SECTIONS.items():
            extra = set(d.get(sec) or {}) - keys
            if extra:
                raise ConfigError(f"unknown keys in '{sec}': {sorted(extra)}")
        try:
            geo = LimbGeometry(**(d.get("geometry") or {}))
            m = d.get("mpc") or {}
            mpc = MpcConfig(
                Q=(m.get("Qx", 3.0), m.get("Qy", 3.0)),
                R=m.get("R", 0.2),
                N=m.get("N", 3),
                a_max=max_step_length(geo),
            )
            seed = int(d.get("seed", 0))
            dist = DisturbanceModel(seed=seed, **(d.get("disturbance") or {}))
            search = SearchConfig(**(d.get("search") or {}))
            f = dict(d.get("follow") or {})
            theta0 = math.radians(f.pop("theta0_deg", 45.0))
            follow = FollowConfig(theta0=theta0, **f)
            grid = d.get("grid")
            cfg = cls(
                grid=(base_dir / grid).resolve() if grid else None,
                start=_point(d.get("start"), "start"),
                goal=_point(d.get("goal"), "goal"),
                seed=seed,
                out_dir=Path(d.get("out_dir", "out")),
                air_step=float(d.get("air_step", 0.1)),
                geometry=geo,
                mpc=mpc,
                disturbance=dist,
                search=search,
                follow=follow,
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
        if cfg.air_step <= 0:
            raise ConfigError("air_step must be positive")
        digest = d.get("grid_sha256")
        if digest and cfg.grid is not None and cfg.grid.exists():
            if hashlib.sha256(cfg.grid.read_bytes()).hexdigest() != digest:
                raise ConfigError(f"{cfg.grid} does not match the recorded grid_sha256")
        return cfg

    def with_seed(self, seed: int) -> "MissionConfig":
        from dataclasses import replace

        return replace(self, seed=seed, disturbance=replace(self.disturbance, seed=seed))

    def to_dict(self) -> dict[str, Any]:
        g, m, dist, s, f = self.geometry, self.mpc, self.disturbance, self.search, self.follow
        out: dict[str, Any] = {
            "seed": self.seed,
            "out_dir": str(self.out_dir),
            "air_step": self.air_step,
            "geometry": {"femur_length": g.femur_length, "tibia_length": g.tibia_length, "body_height": g.body_height},
            "mpc": {"Qx": m.Q[0], "Qy": m.Q[1], "R": m.R, "N": m.N},
            "disturbance": {
                "enabled": dist.enabled,
                "step_length_noise": dist.step_length_noise,
                "heading_noise": dist.heading_noise,
                "heading_bias": dist.heading_bias,
            },
            "search": {"connectivity_2d": s.connectivity_2d.value, "connectivity_3d": s.connectivity_3d.value, "heuristic": s.heuristic.value},
            "follow": {
                "theta0_deg": math.degrees(f.theta0),
                "goal_tolerance": f.goal_tolerance,
                "lookahead": f.lookahead,
                "axis_deadband": f.axis_deadband,
                "budget_factor": f.budget_factor,
            },
        }
        if self.grid is not None:
            out["grid"] = str(self.grid)
            if self.grid.exists():
                out["grid_sha256"] = hashlib.sha256(self.grid.read_bytes()).hexdigest()
        if self.start is not None:
            out["start"] = list(self.start)
        if self.goal is not None:
            out["goal"] = list(self.goal)
        return out


def _point(v, name) -> Optional[tuple[float, float, float]]:
    if v is None:
        return None
    if len(v) != 3:
        raise ConfigError(f"{name} must have three coordinates")
    return tuple(float(c) for c in v)


def load_config(path: Path | str | None) -> MissionConfig:
    if path is None:
        return MissionConfig()
    path = Path(path)
    data = yaml.safe_load(path.read_text()) or {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return MissionConfig.from_dict(data, base_dir=path.parent)


def dump_manifest(cfg: MissionConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=True, default_flow_style=False)
