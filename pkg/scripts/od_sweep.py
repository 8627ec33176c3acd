"""Storage efficiency versus optical depth with per-point Raman timing."""

import argparse
import csv
import math
from dataclasses import replace
from pathlib import Path

import numpy as np

from holememory.hole_profile import HoleProfile
from holememory.protocol import GridSettings, RamanShape, SequenceSpec, sweep_od


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("results"))
    ap.add_argument("--od", type=float, nargs="+", default=list(np.arange(2.0, 18.0, 2.0)))
    ap.add_argument("--area-pi", type=float, default=0.85)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--coarse", action="store_true", help="25 slices, 300 detuning bins")
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    spec = SequenceSpec(profile=HoleProfile(230.0, 3.0, 8.7), raman=RamanShape(area=args.area_pi * math.pi))
    if args.coarse:
        spec = replace(spec, grid=GridSettings(z_slices=25, detuning_bins=300))
    pts = sweep_od(spec, sorted(args.od), threads=args.threads)
    with open(args.out / f"od_sweep_{args.area_pi:g}pi.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["od", "eta_s", "raman1_start_us"])
        for p in pts:
            w.writerow([f"{p.od:g}", f"{p.eta_s:.6g}", f"{p.raman1_start:.6g}"])
            print(f"d={p.od:5.2f}  eta_s={p.eta_s:.4f}  raman1={p.raman1_start:.3f}")


if __name__ == "__main__":
    main()
