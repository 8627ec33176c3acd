"""Input, slow-light and stored/retrieved traces for the reference and high-OD cases."""

import argparse
import csv
import math
from pathlib import Path

from holememory.hole_profile import HoleProfile
from holememory.propagation import peak_time
from holememory.protocol import InputPulse, RamanShape, SequenceSpec, run_optimized, run_slow_light

CASES = {
    "reference": SequenceSpec(profile=HoleProfile(230.0, 3.0, 8.7)),
    "high_od": SequenceSpec(
        profile=HoleProfile(230.0, 3.0, 17.5), input=InputPulse(fwhm_us=4.8), raman=RamanShape(area=math.pi)
    ),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("results"))
    ap.add_argument("--case", choices=sorted(CASES), action="append")
    ap.add_argument("--iterations", type=int, default=10, help="golden-section iterations")
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    for name in args.case or sorted(CASES):
        spec = CASES[name]
        res = run_optimized(spec, args.iterations)
        inp, slow = run_slow_light(spec, res.output.grid.t_end)
        with open(args.out / f"traces_{name}.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t_us", "input", "slow_light", "stored"])
            for row in zip(inp.times, inp.intensity, slow.intensity, res.output.intensity):
                w.writerow([f"{x:.6g}" for x in row])
        delay = peak_time(slow) - peak_time(inp)
        print(
            f"{name}: delay {delay:.3f} us  raman1 {res.raman1_start:.3f} us  eta_s {res.eta_s:.4f}  "
            f"leaked {res.leaked:.4f}  between {res.between_pulses:.2e}"
        )


if __name__ == "__main__":
    main()
