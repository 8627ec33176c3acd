"""Hyperlorentzian spectral-hole lineshape: evaluation, fitting, trace I/O."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .fitting import DegenerateDataError, FitReport, gauss_newton


@dataclass(frozen=True)
class HoleProfile:
    """Absorbing feature of width W (MHz) with a hole of width delta0 (kHz).

    The optical depth seen at detuning D is ``od * g(D)``; outside +-W/2 the
    medium is transparent.
    """

    delta0_khz: float = 230.0
    n: float = 3.0
    od: float = 8.7
    feature_width_mhz: float = 2.1

    def __post_init__(self):
        if not self.delta0_khz > 0:
            raise ValueError("hole width must be positive")
        if not self.n >= 1:
            raise ValueError("shape exponent must be >= 1")
        if not self.od >= 0:
            raise ValueError("optical depth must be non-negative")
        if not self.feature_width_mhz > self.delta0_khz / 1000.0:
            raise ValueError("feature must be wider than the hole")

    @property
    def half_feature_khz(self) -> float:
        return 500.0 * self.feature_width_mhz

    def with_od(self, od: float) -> "HoleProfile":
        return HoleProfile(self.delta0_khz, self.n, od, self.feature_width_mhz)


def g(delta_khz, profile: HoleProfile):
    """Normalised absorption 1 - 1/(1 + |2D/delta0|^n), zero outside the feature."""
    delta = np.asarray(delta_khz, dtype=float)
    u = np.abs(2.0 * delta / profile.delta0_khz) ** profile.n
    val = u / (1.0 + u)
    val = np.where(np.abs(delta) <= profile.half_feature_khz, val, 0.0)
    return val if val.ndim else float(val)


def lorentz_part(delta_khz, profile: HoleProfile):
    """The transmitted dip 1/(1 + |2D/delta0|^n) restricted to the feature."""
    delta = np.asarray(delta_khz, dtype=float)
    u = np.abs(2.0 * delta / profile.delta0_khz) ** profile.n
    return np.where(np.abs(delta) <= profile.half_feature_khz, 1.0 / (1.0 + u), 0.0)


def extrapolate_od(d_ref: float, strength_ratio: float) -> float:
    """Scale an optical depth measured on a reference transition by the oscillator-strength ratio."""
    if d_ref < 0:
        raise ValueError("reference optical depth must be non-negative")
    if not strength_ratio > 0:
        raise ValueError("strength ratio must be positive")
    return d_ref * strength_ratio


@dataclass(frozen=True)
class AbsorptionTrace:
    detunings_khz: np.ndarray
    optical_depths: np.ndarray
    noise_sigma: float | None = None

    def __post_init__(self):
        x = np.asarray(self.detunings_khz, dtype=float)
        y = np.asarray(self.optical_depths, dtype=float)
        if x.shape != y.shape or x.ndim != 1:
            raise ValueError("detunings and optical depths must have equal length")
        if np.any(np.diff(x) <= 0):
            raise ValueError("detunings must be strictly increasing")
        object.__setattr__(self, "detunings_khz", x)
        object.__setattr__(self, "optical_depths", y)

    @classmethod
    def synthetic(cls, profile: HoleProfile, detunings_khz, noise_sigma: float = 0.0, rng=None) -> "AbsorptionTrace":
        x = np.asarray(detunings_khz, dtype=float)
        y = profile.od * g(x, profile)
        if noise_sigma > 0:
            rng = np.random.default_rng(rng)
            y = y + rng.normal(0.0, noise_sigma, size=x.shape)
        return cls(x, y, noise_sigma if noise_sigma > 0 else None)


def _model_and_jacobian(x, params, half_width):
    delta0, n, od = params
    inside = np.abs(x) <= half_width
    ratio = np.abs(2.0 * x / delta0)
    u = ratio**n
    gval = np.where(inside, u / (1.0 + u), 0.0)
    dg_du = np.where(inside, 1.0 / (1.0 + u) ** 2, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        logr = np.where(ratio > 0, np.log(np.where(ratio > 0, ratio, 1.0)), 0.0)
    J = np.empty((x.size, 3))
    J[:, 0] = od * dg_du * (-n * u / delta0)
    J[:, 1] = od * dg_du * u * logr
    J[:, 2] = gval
    return od * gval, J


def fit_hole(trace: AbsorptionTrace, init: HoleProfile, max_iter: int = 200) -> tuple[HoleProfile, FitReport]:
    """Least-squares fit of ``od * g`` to an absorption trace.

    Fits (delta0, n, od); the feature width is taken from ``init``.
    """
    x = trace.detunings_khz
    y = trace.optical_depths
    if x.min() > -2 * init.delta0_khz or x.max() < 2 * init.delta0_khz:
        raise ValueError("trace must cover at least +-2*delta0 around the hole")
    if np.ptp(y) == 0:
        raise DegenerateDataError("constant absorption trace has no hole to fit")
    half = init.half_feature_khz

    def residual(p):
        return _model_and_jacobian(x, p, half)[0] - y

    def jacobian(p):
        return _model_and_jacobian(x, p, half)[1]

    report = gauss_newton(
        residual,
        jacobian,
        [init.delta0_khz, init.n, init.od],
        lower=[1e-6, 1.0, 0.0],
        max_iter=max_iter,
    )
    delta0, n, od = report.params
    return HoleProfile(float(delta0), float(n), float(od), init.feature_width_mhz), report


def read_trace(path) -> AbsorptionTrace:
    """Read a ``detuning_khz,od`` CSV; ValueError messages carry the line number."""
    xs, ys = [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["detuning_khz", "od"]:
            raise ValueError(f"{path}:1: expected header 'detuning_khz,od'")
        for row in reader:
            if not row or row[0].startswith("#"):
                continue
            if len(row) != 2:
                raise ValueError(f"{path}:{reader.line_num}: expected 2 columns, got {len(row)}")
            try:
                xs.append(float(row[0]))
                ys.append(float(row[1]))
            except ValueError:
                raise ValueError(f"{path}:{reader.line_num}: non-numeric value") from None
    if len(xs) < 4:
        raise ValueError(f"{path}: need at least 4 data rows")
    try:
        return AbsorptionTrace(np.array(xs), np.array(ys))
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None


def write_trace(path, trace: AbsorptionTrace) -> None:
    with open(Path(path), "w", newline="") as fh:
        fh.write("detuning_khz,od\n")
        for x, y in zip(trace.detunings_khz, trace.optical_depths):
            fh.write(f"{float(x)!r},{float(y)!r}\n")
