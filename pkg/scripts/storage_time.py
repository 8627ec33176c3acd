"""Efficiency versus storage time and a refit of the spin linewidth from it."""

import argparse
import csv
from pathlib import Path

import numpy as np

from holememory.analysis import DecayCurve, fit_decay, half_efficiency_time
from holememory.hole_profile import HoleProfile
from holememory.protocol import SequenceSpec, optimize_raman_timing, sweep_storage_time


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("results"))
    ap.add_argument("--gamma-khz", type=float, default=25.6)
    ap.add_argument("--ts", type=float, nargs="+", default=list(np.arange(2.0, 40.5, 2.0)))
    ap.add_argument("--noise", type=float, default=0.05, help="relative noise for the refit")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    spec = SequenceSpec(profile=HoleProfile(230.0, 3.0, 8.7), spin_linewidth_khz=args.gamma_khz)
    best, _ = optimize_raman_timing(spec)
    pts = sweep_storage_time(spec.with_raman1(best), args.ts)
    with open(args.out / "storage_time.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["ts_us", "eta_s"])
        for p in pts:
            w.writerow([f"{p.storage_time_us:g}", f"{p.eta_s:.6g}"])

    ts = np.array([p.storage_time_us for p in pts])
    eta = np.array([p.eta_s for p in pts])
    rng = np.random.default_rng(args.seed)
    noisy = DecayCurve(ts, np.clip(eta * (1 + args.noise * rng.standard_normal(ts.size)), 0.0, 1.0))
    fit = fit_decay(noisy)
    print(f"half-efficiency storage time {half_efficiency_time(args.gamma_khz):.2f} us")
    print(f"refit with {args.noise:.0%} noise: gamma {fit.gamma_khz:.2f} kHz, eta0 {fit.eta0:.4f}")


if __name__ == "__main__":
    main()
