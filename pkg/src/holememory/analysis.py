"""Spin-decay fitting and photon-counting statistics.

Decay model: a Gaussian spin-frequency distribution of FWHM gamma dephases
the stored spin wave as

    D(T) = exp(-(pi * gamma * T)^2 / (2 ln 2))

with gamma in kHz and T in us (gamma*T is converted to cycles).
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .fitting import DegenerateDataError, FitError, FitReport, gauss_newton

LN2 = math.log(2.0)


def spin_dephasing_factor(ts_us, gamma_khz: float):
    """Retrieval efficiency factor after storage time ``ts_us``."""
    if gamma_khz < 0:
        raise ValueError("spin linewidth must be non-negative")
    x = math.pi * gamma_khz * 1e-3 * np.asarray(ts_us, dtype=float)
    out = np.exp(-(x**2) / (2.0 * LN2))
    return float(out) if out.ndim == 0 else out


def half_efficiency_time(gamma_khz: float) -> float:
    """Storage time (us) at which D drops to 1/2."""
    if gamma_khz <= 0:
        return math.inf
    return math.sqrt(2.0) * LN2 / (math.pi * gamma_khz * 1e-3)


def inverse_e_time(gamma_khz: float) -> float:
    """Storage time (us) at which D drops to 1/e."""
    if gamma_khz <= 0:
        return math.inf
    return math.sqrt(2.0 * LN2) / (math.pi * gamma_khz * 1e-3)


@dataclass(frozen=True)
class DecayCurve:
    ts_us: np.ndarray
    efficiencies: np.ndarray
    sigmas: np.ndarray | None = None

    def __post_init__(self):
        t = np.asarray(self.ts_us, dtype=float)
        e = np.asarray(self.efficiencies, dtype=float)
        if t.ndim != 1 or t.shape != e.shape:
            raise ValueError("storage times and efficiencies must have equal length")
        if np.any(e < 0) or np.any(e > 1):
            raise ValueError("efficiencies must lie in [0, 1]")
        if np.any(t < 0):
            raise ValueError("storage times must be non-negative")
        object.__setattr__(self, "ts_us", t)
        object.__setattr__(self, "efficiencies", e)
        if self.sigmas is not None:
            s = np.asarray(self.sigmas, dtype=float)
            if s.shape != t.shape or np.any(s <= 0):
                raise ValueError("sigmas must be positive and match the data")
            object.__setattr__(self, "sigmas", s)

    @classmethod
    def synthetic(cls, ts_us, eta0: float, gamma_khz: float, rel_noise: float = 0.0, rng=None) -> "DecayCurve":
        eff = eta0 * spin_dephasing_factor(ts_us, gamma_khz)
        if rel_noise > 0:
            rng = np.random.default_rng(rng)
            eff = eff * (1.0 + rel_noise * rng.standard_normal(np.shape(eff)))
        return cls(ts_us, np.clip(eff, 0.0, 1.0))


@dataclass(frozen=True)
class DecayFit:
    gamma_khz: float
    eta0: float
    report: FitReport


def _decay_init(t: np.ndarray, e: np.ndarray) -> tuple[float, float]:
    """Log-linear estimate: ln e = ln eta0 - a t^2."""
    ok = e > 0.02 * e.max()
    if ok.sum() >= 2 and np.ptp(t[ok]) > 0:
        slope, icpt = np.polyfit(t[ok] ** 2, np.log(e[ok]), 1)
        a = max(-slope, 1e-12)
        return math.exp(icpt), math.sqrt(2.0 * LN2 * a) / (math.pi * 1e-3)
    return float(e.max()), 1.0 / (math.pi * 1e-3 * max(t.max(), 1e-6))


def fit_decay(curve: DecayCurve, max_iter: int = 200) -> DecayFit:
    """Least-squares fit of eta0 * D(T; gamma); gamma returned as FWHM in kHz."""
    t, e = curve.ts_us, curve.efficiencies
    if t.size < 4:
        raise ValueError("need at least 4 points")
    if np.ptp(e) <= 1e-12 * max(abs(e).max(), 1e-300):
        raise DegenerateDataError("flat decay curve: linewidth is not identifiable")
    w = np.ones_like(t) if curve.sigmas is None else 1.0 / curve.sigmas
    c = (math.pi * 1e-3) ** 2 / (2.0 * LN2)

    def residual(p):
        return w * (p[0] * np.exp(-c * (p[1] * t) ** 2) - e)

    def jacobian(p):
        d = np.exp(-c * (p[1] * t) ** 2)
        return np.column_stack([w * d, w * p[0] * d * (-2.0 * c * p[1] * t**2)])

    eta0, gamma = _decay_init(t, e)
    rep = gauss_newton(residual, jacobian, [eta0, gamma], lower=[0.0, 0.0], max_iter=max_iter)
    eta0, gamma = (float(v) for v in rep.params)
    if t.max() < inverse_e_time(gamma):
        raise FitError("data do not span one 1/e decay time", rep.params)
    return DecayFit(gamma, eta0, rep)


def read_decay(path) -> DecayCurve:
    """Read a ``ts_us,eta_s`` CSV (an optional third column ``sigma`` is allowed)."""
    ts, es, ss = [], [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader, [])]
        if header[:2] != ["ts_us", "eta_s"] or len(header) > 3:
            raise ValueError(f"{path}:1: expected header 'ts_us,eta_s[,sigma]'")
        for row in reader:
            if not row or row[0].startswith("#"):
                continue
            if len(row) != len(header):
                raise ValueError(f"{path}:{reader.line_num}: expected {len(header)} columns, got {len(row)}")
            try:
                vals = [float(v) for v in row]
            except ValueError:
                raise ValueError(f"{path}:{reader.line_num}: non-numeric value") from None
            ts.append(vals[0])
            es.append(vals[1])
            if len(vals) == 3:
                ss.append(vals[2])
    try:
        return DecayCurve(np.array(ts), np.array(es), np.array(ss) if ss else None)
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None


# ---------------------------------------------------------------- photon counting


@dataclass(frozen=True)
class CountHistogram:
    bin_edges: np.ndarray
    counts: np.ndarray
    trials: int
    mu_in: float = 0.0

    def __post_init__(self):
        edges = np.asarray(self.bin_edges, dtype=float)
        counts = np.asarray(self.counts)
        if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
            raise ValueError("bin edges must be strictly increasing")
        if counts.shape != (edges.size - 1,):
            raise ValueError("need one count per bin")
        if not np.issubdtype(counts.dtype, np.integer) or np.any(counts < 0):
            raise ValueError("counts must be non-negative integers")
        if self.trials <= 0:
            raise ValueError("trials must be positive")
        if self.mu_in < 0:
            raise ValueError("mu_in must be non-negative")
        object.__setattr__(self, "bin_edges", edges)
        object.__setattr__(self, "counts", counts.astype(np.int64))

    @property
    def bin_starts(self) -> np.ndarray:
        return self.bin_edges[:-1]

    @property
    def bin_width(self) -> float:
        return float(self.bin_edges[1] - self.bin_edges[0])

    def windowed(self, window: tuple[float, float] | None = None) -> int:
        """Counts in bins lying entirely inside ``window``."""
        if window is None:
            return int(self.counts.sum())
        lo, hi = window
        tol = 1e-9 * self.bin_width
        inside = (self.bin_edges[:-1] >= lo - tol) & (self.bin_edges[1:] <= hi + tol)
        return int(self.counts[inside].sum())


def histogram_edges(window: tuple[float, float], bin_width_us: float) -> np.ndarray:
    lo, hi = window
    if not hi > lo or not bin_width_us > 0:
        raise ValueError("need a positive window and bin width")
    n = int(round((hi - lo) / bin_width_us))
    if n < 1 or not math.isclose(n * bin_width_us, hi - lo, rel_tol=1e-9):
        raise ValueError("window must be an integer number of bins")
    return lo + bin_width_us * np.arange(n + 1)


def bin_weights_from_intensity(times, intensity, edges) -> np.ndarray:
    """Fraction of a sampled intensity trace falling in each histogram bin."""
    t = np.asarray(times, dtype=float)
    y = np.asarray(intensity, dtype=float)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(t))])
    at = np.interp(edges, t, cum)
    w = np.clip(np.diff(at), 0.0, None)
    if w.sum() <= 0:
        raise ValueError("intensity trace has no weight inside the histogram span")
    return w / w.sum()


def gaussian_bin_weights(edges, center: float, fwhm: float) -> np.ndarray:
    from scipy.special import erf

    s = fwhm / math.sqrt(8.0 * LN2)
    cdf = 0.5 * (1.0 + erf((np.asarray(edges) - center) / (s * math.sqrt(2.0))))
    w = np.diff(cdf)
    return w / w.sum()


def monte_carlo_counts(
    signal_mean: float,
    noise_mean: float,
    trials: int,
    window: tuple[float, float] = (0.0, 4.0),
    rng_seed: int = 0,
    *,
    bin_width_us: float = 0.1,
    signal_weights=None,
    mu_in: float = 0.0,
    threads: int = 1,
    block: int = 1000,
) -> CountHistogram:
    """Poisson detections summed over ``trials`` repetitions.

    ``signal_mean`` and ``noise_mean`` are expected detections per trial over
    the whole histogram span.  Signal counts follow ``signal_weights`` (per
    bin, default: Gaussian of 3 us FWHM centred in the span); noise is flat.
    Trials are generated in blocks with seeds spawned from ``rng_seed``, so
    the histogram does not depend on ``threads``.
    """
    if signal_mean < 0 or noise_mean < 0:
        raise ValueError("means must be non-negative")
    if trials <= 0:
        raise ValueError("trials must be positive")
    edges = histogram_edges(window, bin_width_us)
    nb = edges.size - 1
    if signal_weights is None:
        weights = gaussian_bin_weights(edges, 0.5 * (edges[0] + edges[-1]), 3.0)
    else:
        weights = np.asarray(signal_weights, dtype=float)
        if weights.shape != (nb,) or np.any(weights < 0) or weights.sum() <= 0:
            raise ValueError("signal weights must be non-negative, one per bin")
        weights = weights / weights.sum()
    rate = signal_mean * weights + noise_mean / nb
    sizes = [block] * (trials // block) + ([trials % block] if trials % block else [])
    seeds = np.random.SeedSequence(rng_seed).spawn(len(sizes))

    def one(args):
        size, seq = args
        # sum of `size` independent Poisson trials per bin
        return np.random.default_rng(seq).poisson(size * rate)

    jobs = list(zip(sizes, seeds))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(one, jobs))
    else:
        parts = [one(j) for j in jobs]
    counts = np.zeros(nb, dtype=np.int64)
    for p in parts:
        counts += p
    return CountHistogram(edges, counts, trials, mu_in)


def write_histogram(path, hist: CountHistogram) -> None:
    with open(Path(path), "w", newline="") as fh:
        fh.write(f"# trials={hist.trials}\n# mu_in={float(hist.mu_in)!r}\n# bin_width_us={hist.bin_width!r}\n")
        fh.write("bin_start_us,counts\n")
        for t, c in zip(hist.bin_starts, hist.counts):
            fh.write(f"{t:.6f},{int(c)}\n")


def read_histogram(path) -> CountHistogram:
    meta: dict[str, float] = {}
    starts, counts = [], []
    with open(path, newline="") as fh:
        lines = fh.read().splitlines()
    header_seen = False
    for num, line in enumerate(lines, 1):
        if line.startswith("#"):
            key, _, val = line[1:].strip().partition("=")
            meta[key.strip()] = float(val)
            continue
        if not line.strip():
            continue
        if not header_seen:
            if line.strip() != "bin_start_us,counts":
                raise ValueError(f"{path}:{num}: expected header 'bin_start_us,counts'")
            header_seen = True
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise ValueError(f"{path}:{num}: expected 2 columns")
        try:
            starts.append(float(parts[0]))
            counts.append(int(parts[1]))
        except ValueError:
            raise ValueError(f"{path}:{num}: malformed row") from None
    for key in ("trials", "bin_width_us"):
        if key not in meta:
            raise ValueError(f"{path}: missing '# {key}=' header")
    edges = np.append(starts, starts[-1] + meta["bin_width_us"])
    return CountHistogram(edges, np.array(counts), int(meta["trials"]), meta.get("mu_in", 0.0))


@dataclass(frozen=True)
class SnrReport:
    mu_in: float
    snr: float
    snr_sigma: float
    signal_mean: float
    noise_mean: float
    window_us: float
    mu1: float
    mu1_sigma: float
    infinite: bool = False
    total_var: float = 0.0  # variance of the windowed signal-run rate
    noise_var: float = 0.0  # variance of the windowed noise rate


def compute_snr(signal_hist: CountHistogram, noise_hist: CountHistogram, window=None) -> SnrReport:
    """Noise-subtracted signal over noise inside ``window`` with Poisson errors."""
    if noise_hist.mu_in != 0:
        raise ValueError("noise histogram must have mu_in = 0")
    if signal_hist.bin_edges.shape != noise_hist.bin_edges.shape or not np.allclose(
        signal_hist.bin_edges, noise_hist.bin_edges
    ):
        raise ValueError("histograms must share their binning")
    if window is None:
        window = (float(signal_hist.bin_edges[0]), float(signal_hist.bin_edges[-1]))
    cs = signal_hist.windowed(window)
    cn = noise_hist.windowed(window)
    ts, tn = signal_hist.trials, noise_hist.trials
    s_tot = cs / ts
    noise = cn / tn
    signal = s_tot - noise
    width = float(window[1] - window[0])
    if cn == 0:
        return SnrReport(signal_hist.mu_in, math.inf, math.inf, signal, 0.0, width, 0.0, math.inf, True, cs / ts**2)
    snr = signal / noise
    var_s = cs / ts**2
    var_n = cn / tn**2
    # snr = s_tot/noise - 1
    snr_sigma = math.sqrt(var_s / noise**2 + (s_tot / noise**2) ** 2 * var_n)
    mu = signal_hist.mu_in
    if snr > 0:
        mu1, mu1_sigma = mu / snr, mu * snr_sigma / snr**2
    else:
        mu1, mu1_sigma = math.inf, math.inf
    return SnrReport(mu, snr, snr_sigma, signal, noise, width, mu1, mu1_sigma, False, var_s, var_n)


def _slope_sigma_poisson(pts, w, x, sxx) -> float:
    """Slope error from the count variances; reports sharing a noise run are correlated."""
    var = 0.0
    shared: dict[tuple[float, float], float] = {}
    for wi, xi, r in zip(w, x, pts):
        n = r.noise_mean
        s_tot = r.signal_mean + n
        var += (wi * xi / (n * sxx)) ** 2 * r.total_var
        key = (n, r.noise_var)
        shared[key] = shared.get(key, 0.0) - wi * xi * s_tot / (n**2 * sxx)
    var += sum(d**2 * key[1] for key, d in shared.items())
    return math.sqrt(var)


def fit_mu1(reports) -> tuple[float, float]:
    """Weighted fit SNR = mu_in / mu1 through the origin; returns (mu1, sigma).

    Weights are 1/snr_sigma^2.  When the reports carry count variances the
    slope error is propagated from them (including the noise run shared by
    several reports); otherwise it is 1/sqrt(sum w x^2), or the residual
    scatter for unweighted data.
    """
    pts = [r for r in reports if r.mu_in > 0 and not r.infinite]
    if not pts:
        raise ValueError("no signal points (need mu_in > 0 with finite SNR)")
    x = np.array([r.mu_in for r in pts])
    y = np.array([r.snr for r in pts])
    sig = np.array([r.snr_sigma for r in pts])
    weighted = bool(np.all(np.isfinite(sig) & (sig > 0)))
    w = 1.0 / sig**2 if weighted else np.ones_like(x)
    sxx = float(np.sum(w * x * x))
    slope = float(np.sum(w * x * y)) / sxx
    if not slope > 0:
        raise FitError("SNR does not grow with mu_in; mu1 undefined")
    if not weighted:
        resid = y - slope * x
        dof = max(x.size - 1, 1)
        slope_sigma = math.sqrt(float(resid @ resid) / dof / sxx)
    elif any(r.total_var > 0 or r.noise_var > 0 for r in pts):
        slope_sigma = _slope_sigma_poisson(pts, w, x, sxx)
    else:
        slope_sigma = 1.0 / math.sqrt(sxx)
    return 1.0 / slope, slope_sigma / slope**2


@dataclass(frozen=True)
class PhotonChain:
    """Mean detections per pulse from the memory to the detector.

    The noise floor is quoted at the same reference plane as the retrieved
    signal, so path losses scale both and leave the SNR unchanged.
    """

    retrieval_efficiency: float = 0.297
    path_transmission: float = 0.15
    detector_efficiency: float = 1.0
    noise_per_us: float = 2.25e-3
    window_us: float = 4.0

    def __post_init__(self):
        for name in ("retrieval_efficiency", "path_transmission", "detector_efficiency"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.noise_per_us < 0 or self.window_us <= 0:
            raise ValueError("noise rate must be >= 0 and window > 0")

    @property
    def loss(self) -> float:
        return self.path_transmission * self.detector_efficiency

    @property
    def noise_per_window(self) -> float:
        return self.noise_per_us * self.window_us

    def signal_mean(self, mu_in: float) -> float:
        return mu_in * self.retrieval_efficiency * self.loss

    def noise_mean(self) -> float:
        return self.noise_per_window * self.loss
