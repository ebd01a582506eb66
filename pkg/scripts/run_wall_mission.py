"""Walk-fly-walk mission over the bundled wall world; prints the phase sequence.

Usage: python scripts/run_wall_mission.py [--seed 0] [--out out/wall]
"""

import argparse
from itertools import groupby
from pathlib import Path

from bimodal_nav.cli import main as cli_main
from bimodal_nav.sim import TrajectoryLog

DATA = Path(__file__).resolve().parents[1] / "src" / "bimodal_nav" / "data"


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="out/wall")
    args = ap.parse_args()
    rc = cli_main(["mission", str(DATA / "wall_mission.yaml"), "--seed", str(args.seed), "--out-dir", args.out])
    if rc:
        raise SystemExit(rc)
    log = TrajectoryLog.from_csv((Path(args.out) / "trajectory.csv").read_text())
    for mode, recs in groupby(log.records, key=lambda r: r.mode):
        recs = list(recs)
        print(f"{mode.value:6s} t={recs[0].t:4d}..{recs[-1].t:4d}  records={len(recs)}")
    print((Path(args.out) / "report.json").read_text())


if __name__ == "__main__":
    main()
