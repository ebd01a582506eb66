"""Straight 3.6 m line, open loop vs MPC over paired seeds.

Usage: python scripts/run_straight_line.py [--seeds 100] [--recalibrate]
"""

import argparse
import math
from dataclasses import replace

import numpy as np

from bimodal_nav import LimbGeometry, MpcConfig
from bimodal_nav.sim import (
    DisturbanceModel,
    Granularity,
    calibrate_noise,
    compute_errors,
    run_closed_loop,
    run_open_loop,
    straight_line,
)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seeds", type=int, default=100)
    ap.add_argument("--length", type=float, default=3.6)
    ap.add_argument("--recalibrate", action="store_true", help="refit the heading bias to a 9.77 cm open-loop RMSE first")
    args = ap.parse_args()

    geom, path = LimbGeometry(), straight_line(args.length)
    dist = DisturbanceModel()
    if args.recalibrate:
        dist = calibrate_noise(0.0977, range(args.seeds), path, geom, dist, math.radians(45))
        print(f"calibrated heading_bias = {dist.heading_bias:.6f} rad")

    rows = []
    for seed in range(args.seeds):
        d = replace(dist, seed=seed)
        o = compute_errors(run_open_loop(path, geom, d), Granularity.FULLSTEP)
        c = compute_errors(run_closed_loop(path, geom, MpcConfig(), d), Granularity.FULLSTEP, baseline=o)
        rows.append((o.rmse, o.max_error, c.rmse, c.max_error))
    r = 100 * np.array(rows)
    o_rmse, o_max, c_rmse, c_max = r.mean(axis=0)
    print(f"{'':12s}{'RMSE [cm]':>12s}{'max [cm]':>12s}")
    print(f"{'open loop':12s}{o_rmse:12.2f}{o_max:12.2f}")
    print(f"{'MPC':12s}{c_rmse:12.2f}{c_max:12.2f}")
    print(f"{'improvement':12s}{100 * (o_rmse - c_rmse) / o_rmse:11.2f}%{100 * (o_max - c_max) / o_max:11.2f}%")
    print(f"worst closed-loop max error over {args.seeds} seeds: {r[:, 3].max():.2f} cm")


if __name__ == "__main__":
    main()
