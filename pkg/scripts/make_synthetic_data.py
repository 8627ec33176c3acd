"""Regenerate the noiseless synthetic traces bundled in data/."""

import argparse
from pathlib import Path

import numpy as np

from holememory.analysis import DecayCurve
from holememory.hole_profile import AbsorptionTrace, HoleProfile, write_trace


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=Path(__file__).resolve().parent.parent / "data", type=Path)
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    det = np.arange(-1000.0, 1000.0 + 1e-9, 10.0)
    write_trace(args.out / "hole_trace.csv", AbsorptionTrace.synthetic(HoleProfile(230.0, 3.0, 8.7), det))

    ts = np.arange(0.0, 40.0 + 1e-9, 2.5)
    curve = DecayCurve.synthetic(ts, eta0=0.39, gamma_khz=25.6)
    with open(args.out / "decay_trace.csv", "w", newline="\n") as fh:
        fh.write("ts_us,eta_s\n")
        for t, e in zip(curve.ts_us, curve.efficiencies):
            fh.write(f"{float(t)!r},{float(e)!r}\n")


if __name__ == "__main__":
    main()
