"""Storage efficiency as a function of the first Raman pulse start."""

import argparse
import csv
import math
from dataclasses import replace
from pathlib import Path

import numpy as np

from holememory.hole_profile import HoleProfile
from holememory.protocol import GridSettings, RamanShape, SequenceSpec, run_sequence


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("results"))
    ap.add_argument("--starts", type=float, nargs=3, default=[8.0, 12.0, 0.25], metavar=("FROM", "TO", "STEP"))
    ap.add_argument("--area-pi", type=float, default=0.85)
    ap.add_argument("--duration", type=float, default=1.0, help="Raman pulse length, us")
    ap.add_argument("--window", type=float, default=None, help="retrieval window, us")
    ap.add_argument("--coarse", action="store_true")
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    base = SequenceSpec(
        profile=HoleProfile(230.0, 3.0, 8.7),
        raman=RamanShape(duration_us=args.duration, area=args.area_pi * math.pi),
        window_us=args.window,
    )
    if args.coarse:
        base = replace(base, grid=GridSettings(z_slices=25, detuning_bins=300))
    lo, hi, step = args.starts
    with open(args.out / "raman_timing.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["raman1_start_us", "eta_s", "leaked", "between_pulses"])
        for r1 in np.arange(lo, hi + 1e-9, step):
            res = run_sequence(base.with_raman1(float(r1)))
            w.writerow([f"{r1:g}", f"{res.eta_s:.6g}", f"{res.leaked:.6g}", f"{res.between_pulses:.6g}"])
            print(f"r1={r1:6.2f}  eta_s={res.eta_s:.4f}  leaked={res.leaked:.4f}")


if __name__ == "__main__":
    main()
