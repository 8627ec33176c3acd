"""SNR versus mean input photon number and the spread of mu1 over seeds."""

import argparse
import csv
from pathlib import Path

import numpy as np

from holememory.analysis import (
    PhotonChain,
    compute_snr,
    fit_mu1,
    gaussian_bin_weights,
    histogram_edges,
    monte_carlo_counts,
)


def replicate(chain, mus, trials, seed, bin_width=0.1):
    window = (0.0, chain.window_us)
    kw = dict(bin_width_us=bin_width, signal_weights=gaussian_bin_weights(histogram_edges(window, bin_width), 2.0, 3.0))
    noise = monte_carlo_counts(0.0, chain.noise_mean(), trials, window, [seed, 0], **kw)
    reps = [
        compute_snr(monte_carlo_counts(chain.signal_mean(m), chain.noise_mean(), trials, window, [seed, i], mu_in=m, **kw), noise)
        for i, m in enumerate(mus, 1)
    ]
    return reps, fit_mu1(reps)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("results"))
    ap.add_argument("--mu", type=float, nargs="+", default=[0.1, 0.25, 0.5, 1.0, 2.0, 4.0])
    ap.add_argument("--trials", type=int, default=100_000)
    ap.add_argument("--seeds", type=int, default=50)
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    chain = PhotonChain(path_transmission=1.0)
    truth = chain.noise_mean() / chain.signal_mean(1.0)

    reps, (mu1, sigma) = replicate(chain, args.mu, args.trials, 0)
    with open(args.out / "snr_vs_mu.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["mu_in", "snr", "snr_sigma"])
        for r in reps:
            w.writerow([f"{r.mu_in:g}", f"{r.snr:.6g}", f"{r.snr_sigma:.6g}"])
    print(f"seed 0: mu1 = {mu1:.5f} +- {sigma:.5f} (chain value {truth:.5f})")

    fits = np.array([replicate(chain, args.mu, args.trials, s)[1] for s in range(args.seeds)])
    z = (fits[:, 0] - truth) / fits[:, 1]
    print(f"{args.seeds} seeds: mean {fits[:, 0].mean():.5f}, scatter {fits[:, 0].std(ddof=1):.5f}, "
          f"mean reported sigma {fits[:, 1].mean():.5f}, |z|<1 {np.mean(abs(z) < 1):.0%}, |z|<2 {np.mean(abs(z) < 2):.0%}")


if __name__ == "__main__":
    main()
