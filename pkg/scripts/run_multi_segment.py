"""Closed-loop tracking of the bundled multi-segment path over several seeds.

Usage: python scripts/run_multi_segment.py [--seeds 20]
"""

import argparse
from dataclasses import replace
from pathlib import Path

import numpy as np

from bimodal_nav import LimbGeometry, MpcConfig
from bimodal_nav.sim import DisturbanceModel, Granularity, Polyline, compute_errors, run_closed_loop, run_open_loop

DATA = Path(__file__).resolve().parents[1] / "src" / "bimodal_nav" / "data"


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seeds", type=int, default=20)
    args = ap.parse_args()
    pts = np.loadtxt(DATA / "multi_segment_path.txt", ndmin=2)
    path, geom = Polyline(pts), LimbGeometry()
    for seed in range(args.seeds):
        d = replace(DisturbanceModel(), seed=seed)
        closed = run_closed_loop(path, geom, MpcConfig(), d)
        c = compute_errors(closed, Granularity.FULLSTEP)
        o = compute_errors(run_open_loop(path, geom, d), Granularity.FULLSTEP)
        print(f"seed {seed:3d}: open RMSE {100 * o.rmse:6.2f} cm   MPC RMSE {100 * c.rmse:5.2f} cm, max {100 * c.max_error:5.2f} cm, steps {len(closed.steps)}, converged {closed.converged}")


if __name__ == "__main__":
    main()
