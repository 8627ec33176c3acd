"""Grid convergence of the slow-light output and of the storage efficiency."""

import argparse
import csv
from dataclasses import replace
from pathlib import Path

from holememory.core import DetuningGrid, TimeGrid, make_gaussian_pulse
from holememory.hole_profile import HoleProfile
from holememory.propagation import PropagationGrids, compare_oracle, oracle_output
from holememory.protocol import GridSettings, SequenceSpec, run_sequence

PROFILE = HoleProfile(230.0, 3.0, 8.7)
LEVELS = [(0.01, 25, 300), (0.01, 50, 600), (0.01, 100, 1200), (0.005, 200, 2400)]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("results"))
    ap.add_argument("--raman1", type=float, default=9.46, help="first Raman start, us")
    ap.add_argument("--levels", type=int, default=3, help="number of refinement levels to run")
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    rows = []
    for dt, nz, nd in LEVELS[: args.levels]:
        inp = make_gaussian_pulse(3.0, 7.5, 1.0, TimeGrid(0.0, 30.0, dt))
        grids = PropagationGrids(nz, DetuningGrid.uniform(3.0, nd))
        rms = compare_oracle(inp, PROFILE, grids, oracle=oracle_output(inp, PROFILE)).relative_rms
        spec = replace(SequenceSpec(profile=PROFILE, raman1_start_us=args.raman1), grid=GridSettings(dt, nz, nd))
        eta = run_sequence(spec).eta_s
        rows.append((dt, nz, nd, rms, eta))
        print(f"dt={dt:g} nz={nz} nd={nd}: oracle rms {rms:.3e}  eta_s {eta:.5f}")
    with open(args.out / "convergence.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["dt_us", "z_slices", "detuning_bins", "oracle_rms", "eta_s"])
        w.writerows(rows)


if __name__ == "__main__":
    main()
