"""Command line: ``bimodal-nav {plan,follow,mission,calibrate-noise}``.

Exit codes: 0 ok, 2 usage, 3 no path, 4 invalid input, 5 file not found.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

import yaml

from .config import ConfigError, MissionConfig, dump_manifest, load_config
from .grid_map import GridFormatError, OutOfGridError, load_grid
from .kinematics import Axis
from .planner import Mode, ModalPath, NoPathError, PlanningError, Transition, path_to_world, plan_bimodal
from .sim import (
    Granularity,
    Polyline,
    calibrate_noise,
    compute_errors,
    run_closed_loop,
    run_mission,
    run_open_loop,
    straight_line,
)

EXIT_OK = 0
EXIT_NO_PATH = 3
EXIT_INVALID = 4
EXIT_NOT_FOUND = 5

log = logging.getLogger("bimodal_nav")


class InvalidInput(Exception):
    pass


def _summary(mp: ModalPath) -> str:
    return "\n".join(
        [
            f"waypoints: {len(mp)}",
            f"GROUND waypoints: {mp.count(Mode.GROUND)}",
            f"AIR waypoints: {mp.count(Mode.AIR)}",
            f"TAKEOFF: {mp.count(transition=Transition.TAKEOFF)}",
            f"LANDING: {mp.count(transition=Transition.LANDING)}",
        ]
    )


def _resolve(args) -> MissionConfig:
    cfg = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        cfg = cfg.with_seed(args.seed)
    if getattr(args, "out_dir", None) is not None:
        cfg = replace(cfg, out_dir=Path(args.out_dir))
    return cfg


def _write(out_dir: Path, name: str, text: str) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    p = out_dir / name
    p.write_text(text)
    return p


def cmd_plan(args) -> int:
    cfg = _resolve(args)
    grid_path = Path(args.grid) if args.grid else cfg.grid
    if grid_path is None:
        raise InvalidInput("no grid given (use --grid or set 'grid' in the config)")
    grid = load_grid(Path(grid_path))
    start = tuple(args.start) if args.start else cfg.start
    goal = tuple(args.goal) if args.goal else cfg.goal
    if start is None or goal is None:
        raise InvalidInput("start and goal are required")
    mp = plan_bimodal(grid, start, goal, cfg.search)
    p = _write(cfg.out_dir, args.output, mp.dumps())
    print(_summary(mp))
    print(f"path written to {p}")
    return EXIT_OK


def _load_polyline(path: Path) -> Polyline:
    pts = []
    for n, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise InvalidInput(f"{path}:{n}: expected 'x y'")
        pts.append((float(parts[0]), float(parts[1])))
    if not pts:
        raise InvalidInput(f"{path}: no points")
    return Polyline(pts)


def cmd_follow(args) -> int:
    cfg = _resolve(args)
    if args.line is not None:
        path = straight_line(args.line, Axis(args.axis.upper()))
    elif args.polyline:
        path = _load_polyline(Path(args.polyline))
    elif args.path:
        mp = ModalPath.loads(Path(args.path).read_text())
        if mp.count(Mode.AIR):
            raise InvalidInput("path contains AIR waypoints; use the 'mission' command for walk-fly paths")
        grid_path = Path(args.grid) if args.grid else cfg.grid
        if grid_path is None:
            raise InvalidInput("--path needs --grid to map cells to metres")
        grid = load_grid(Path(grid_path))
        path = Polyline([p[:2] for p, _ in path_to_world(mp, grid)])
    else:
        raise InvalidInput("give one of --line, --polyline or --path")

    dist = cfg.disturbance
    if args.no_disturbance:
        dist = replace(dist, enabled=False)
    follow = replace(cfg.follow, log_joints=args.trace)
    closed = run_closed_loop(path, cfg.geometry, cfg.mpc, dist, follow)
    opened = run_open_loop(path, cfg.geometry, dist, cfg.follow.theta0)
    base = compute_errors(opened, Granularity.FULLSTEP)
    rep = compute_errors(closed, Granularity.FULLSTEP, baseline=base)

    out = cfg.out_dir
    _write(out, "closed_loop.csv", closed.to_csv())
    _write(out, "open_loop.csv", opened.to_csv())
    _write(out, "closed_loop_report.json", rep.to_json())
    _write(out, "open_loop_report.json", base.to_json())
    if args.trace:
        _write(out, "mpc_trace.csv", closed.trace_csv())
        _write(out, "joints.csv", closed.joints_csv())
    if not closed.converged:
        log.warning("closed loop used its whole step budget without reaching the end point")
    print(f"open loop:   RMSE {100 * base.rmse:.2f} cm, max {100 * base.max_error:.2f} cm")
    print(f"closed loop: RMSE {100 * rep.rmse:.2f} cm, max {100 * rep.max_error:.2f} cm")
    print(f"improvement: RMSE {rep.improvement_pct:.2f} %, max {rep.max_error_improvement_pct:.2f} %")
    return EXIT_OK


def cmd_mission(args) -> int:
    if args.mission_config:
        args.config = args.mission_config
    cfg = _resolve(args)
    if cfg.grid is None or cfg.start is None or cfg.goal is None:
        raise InvalidInput("mission config needs 'grid', 'start' and 'goal'")
    grid = load_grid(cfg.grid)
    res = run_mission(grid, cfg.start, cfg.goal, cfg.geometry, cfg.mpc, cfg.disturbance, cfg.search, cfg.follow, cfg.air_step)
    out = cfg.out_dir
    _write(out, "path.txt", res.path.dumps())
    _write(out, "trajectory.csv", res.log.to_csv())
    _write(out, "report.json", compute_errors(res.log, Granularity.FULLSTEP, mode=Mode.GROUND).to_json())
    _write(out, "manifest.yaml", dump_manifest(cfg))
    print(_summary(res.path))
    print(f"log records: {len(res.log)}; outputs in {out}")
    return EXIT_OK


def cmd_calibrate(args) -> int:
    cfg = _resolve(args)
    if args.line is not None:
        path = straight_line(args.line)
    else:
        path = straight_line(3.6)
    base = replace(cfg.disturbance, enabled=True)
    cal = calibrate_noise(args.target_rmse, range(cfg.seed, cfg.seed + args.seeds), path, cfg.geometry, base, cfg.follow.theta0)
    frag = {
        "disturbance": {
            "enabled": True,
            "step_length_noise": cal.step_length_noise,
            "heading_noise": cal.heading_noise,
            "heading_bias": cal.heading_bias,
        }
    }
    p = _write(cfg.out_dir, "disturbance.yaml", yaml.safe_dump(frag, sort_keys=True))
    print(f"heading_bias = {cal.heading_bias!r} rad, heading_noise = {cal.heading_noise!r} rad, step_length_noise = {cal.step_length_noise!r}")
    print(f"written to {p}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="disturbance seed")
    common.add_argument("--out-dir", default=argparse.SUPPRESS, help="output directory")
    common.add_argument("--config", default=argparse.SUPPRESS, help="YAML config file")

    ap = argparse.ArgumentParser(prog="bimodal-nav", description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--out-dir", default=None)
    ap.add_argument("--config", default=None)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", parents=[common], help="plan a walk/fly path on a grid")
    p.add_argument("--grid")
    p.add_argument("--start", type=float, nargs=3, metavar=("X", "Y", "Z"))
    p.add_argument("--goal", type=float, nargs=3, metavar=("X", "Y", "Z"))
    p.add_argument("--output", default="path.txt", help="file name inside the output directory")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("follow", parents=[common], help="follow a ground path with and without MPC")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--line", type=float, metavar="LENGTH", help="straight line from the origin, metres")
    src.add_argument("--polyline", help="file with one 'x y' point per line")
    src.add_argument("--path", help="waypoint file written by 'plan' (ground only)")
    p.add_argument("--axis", default="x", choices=["x", "y", "X", "Y"])
    p.add_argument("--grid", help="grid for --path")
    p.add_argument("--no-disturbance", action="store_true")
    p.add_argument("--trace", action="store_true", help="also write the MPC trace and joint-angle log")
    p.set_defaults(func=cmd_follow)

    p = sub.add_parser("mission", parents=[common], help="plan and execute a full walk/fly mission")
    p.add_argument("mission_config", nargs="?", help="mission config (same as --config)")
    p.set_defaults(func=cmd_mission)

    p = sub.add_parser("calibrate-noise", parents=[common], help="fit heading noise to a target open-loop RMSE")
    p.add_argument("--target-rmse", type=float, default=0.0977, help="metres")
    p.add_argument("--seeds", type=int, default=100)
    p.add_argument("--line", type=float, default=None, help="line length, metres (default 3.6)")
    p.set_defaults(func=cmd_calibrate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        log.error("file not found: %s", exc.filename or exc)
        return EXIT_NOT_FOUND
    except NoPathError as exc:
        log.error("no path: %s", exc)
        return EXIT_NO_PATH
    except (InvalidInput, ConfigError, GridFormatError, PlanningError, OutOfGridError, ValueError) as exc:
        log.error("invalid input: %s", exc)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
