"""Grids, envelopes and unit conventions shared by the simulator.

Internal units: time in microseconds, angular frequency in rad/us, position as
the normalised depth z in [0, 1] with the absorption folded into the optical
depth d = alpha*L.  Public helpers take ordinary frequencies (kHz, MHz) and
convert at the boundary.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np
from scipy.special import erfc

TWO_PI = 2.0 * math.pi
FOUR_LN2 = 4.0 * math.log(2.0)

# Resolution rule: dt * (fastest angular rate) must stay below this.
MAX_PHASE_PER_STEP = 0.1


class GridError(ValueError):
    """Raised when a grid is inconsistent or too coarse for the dynamics."""


class TruncationError(ValueError):
    """Raised when a pulse does not fit inside its time grid."""


def khz_to_angular(f_khz):
    """Ordinary frequency in kHz -> angular frequency in rad/us."""
    return np.multiply(f_khz, TWO_PI * 1e-3)


def angular_to_khz(w):
    return np.divide(w, TWO_PI * 1e-3)


def mhz_to_angular(f_mhz):
    return np.multiply(f_mhz, TWO_PI)


def angular_to_mhz(w):
    return np.divide(w, TWO_PI)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class PhysicalParams:
    """Crystal-level parameters.

    The speed of light is kept for reference only: the retarded-frame
    propagation drops the 1/c time derivative (5 mm transit is ~17 ps).
    """

    crystal_length_mm: float = 5.0
    optical_depth: float = 8.7
    feature_width_mhz: float = 2.1
    light_speed_m_per_s: float = 299_792_458.0

    def __post_init__(self):
        if not self.crystal_length_mm > 0:
            raise ValueError("crystal length must be positive")
        if not self.optical_depth >= 0:
            raise ValueError("optical depth must be non-negative")
        if not self.feature_width_mhz > 0:
            raise ValueError("feature width must be positive")

    @property
    def transit_time_us(self) -> float:
        return self.crystal_length_mm * 1e-3 / self.light_speed_m_per_s * 1e6


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time axis ``t_start + i*dt`` for ``i < count``.

    If ``max_rate`` (rad/us) is given, the grid is rejected unless
    ``dt <= 0.1 / max_rate``.
    """

    t_start: float
    t_end: float
    dt: float
    max_rate: float | None = None
    count: int = field(init=False)

    def __post_init__(self):
        if not self.dt > 0:
            raise GridError(f"dt must be positive, got {self.dt}")
        if not self.t_end > self.t_start:
            raise GridError("t_end must exceed t_start")
        object.__setattr__(self, "count", int(round((self.t_end - self.t_start) / self.dt)) + 1)
        if self.max_rate is not None:
            self.check_resolution(self.max_rate)

    def check_resolution(self, max_rate: float) -> None:
        if max_rate > 0 and self.dt > MAX_PHASE_PER_STEP / max_rate:
            raise GridError(
                f"dt={self.dt} us too coarse for rates up to {max_rate:.4g} rad/us "
                f"(need dt <= {MAX_PHASE_PER_STEP / max_rate:.4g} us)"
            )

    @property
    def times(self) -> np.ndarray:
        return self.t_start + self.dt * np.arange(self.count)

    def index_of(self, t: float) -> int:
        """Index of the first sample at or after ``t`` (clipped to the grid)."""
        i = int(math.ceil((t - self.t_start) / self.dt - 1e-9))
        return min(max(i, 0), self.count - 1)


@dataclass(frozen=True)
class DetuningGrid:
    """Symmetric inhomogeneous-detuning axis with trapezoidal weights.

    ``detunings`` and ``weights`` are angular (rad/us); the weights sum to
    the integration span.
    """

    detunings: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.detunings, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if d.ndim != 1 or d.shape != w.shape or d.size < 2:
            raise GridError("detunings and weights must be equal-length 1-d arrays")
        if np.any(np.diff(d) <= 0):
            raise GridError("detunings must be strictly increasing")
        if not np.allclose(d, -d[::-1], rtol=0, atol=1e-12 * max(1.0, abs(d[-1]))):
            raise GridError("detuning grid must be symmetric about zero")
        object.__setattr__(self, "detunings", _frozen(d))
        object.__setattr__(self, "weights", _frozen(w))

    @classmethod
    def uniform(cls, span_mhz: float = 3.0, count: int = 1200) -> "DetuningGrid":
        if count < 2 or span_mhz <= 0:
            raise GridError("need span > 0 and at least two bins")
        half = 0.5 * mhz_to_angular(span_mhz)
        d = np.linspace(-half, half, count)
        w = np.full(count, d[1] - d[0])
        w[0] *= 0.5
        w[-1] *= 0.5
        return cls(d, w)

    @property
    def span(self) -> float:
        return float(self.detunings[-1] - self.detunings[0])

    @property
    def max_abs(self) -> float:
        return float(self.detunings[-1])

    def __len__(self):
        return self.detunings.size


@dataclass(frozen=True)
class ComplexEnvelope:
    """Complex field envelope (Rabi-frequency units, rad/us) sampled on a TimeGrid."""

    grid: TimeGrid
    samples: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=complex)
        if s.shape != (self.grid.count,):
            raise GridError(f"expected {self.grid.count} samples, got {s.shape}")
        if not np.all(np.isfinite(s)):
            raise ValueError("envelope contains non-finite samples")
        object.__setattr__(self, "samples", _frozen(s))

    @classmethod
    def zeros(cls, grid: TimeGrid) -> "ComplexEnvelope":
        return cls(grid, np.zeros(grid.count, dtype=complex))

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    @property
    def intensity(self) -> np.ndarray:
        return np.abs(self.samples) ** 2

    def __add__(self, other: "ComplexEnvelope") -> "ComplexEnvelope":
        if other.grid != self.grid:
            raise GridError("cannot add envelopes on different grids")
        return ComplexEnvelope(self.grid, self.samples + other.samples)

    def scaled(self, factor: complex) -> "ComplexEnvelope":
        return ComplexEnvelope(self.grid, self.samples * factor)

    def midpoints(self) -> np.ndarray:
        return cubic_midpoints(self.samples)

    def restricted(self, t_lo: float, t_hi: float) -> np.ndarray:
        """Samples with ``t_lo <= t <= t_hi`` (others zeroed)."""
        t = self.times
        eps = 1e-9 * self.grid.dt
        return np.where((t >= t_lo - eps) & (t <= t_hi + eps), self.samples, 0.0)


def cubic_midpoints(f: np.ndarray) -> np.ndarray:
    """Values half-way between consecutive samples (length n-1).

    Four-point cubic interpolation in the interior, quadratic at the ends.
    The midpoint sum equals the sample sum up to edge terms, so the pulse
    area seen by RK4 equals the trapezoidal area of the samples.
    """
    f = np.asarray(f, dtype=complex)
    n = f.size
    if n < 3:
        return 0.5 * (f[:-1] + f[1:])
    m = np.empty(n - 1, dtype=complex)
    m[1:-1] = (-f[:-3] + 9.0 * f[1:-2] + 9.0 * f[2:-1] - f[3:]) / 16.0
    m[0] = (3.0 * f[0] + 6.0 * f[1] - f[2]) / 8.0
    m[-1] = (-f[-3] + 6.0 * f[-2] + 3.0 * f[-1]) / 8.0
    return m


def gaussian_energy(fwhm: float, peak: float) -> float:
    """Closed-form time integral of |E|^2 for a Gaussian of intensity FWHM ``fwhm``."""
    return peak**2 * fwhm * math.sqrt(math.pi / FOUR_LN2)


def make_gaussian_pulse(fwhm: float, center: float, peak: complex, grid: TimeGrid) -> ComplexEnvelope:
    """Gaussian amplitude whose intensity has full width ``fwhm`` at half maximum."""
    if not fwhm > 0:
        raise ValueError("fwhm must be positive")
    if not grid.t_start <= center <= grid.t_end:
        raise ValueError("pulse centre lies outside the grid")
    # fraction of |E|^2 falling outside [t_start, t_end]
    sigma = fwhm / math.sqrt(2.0 * FOUR_LN2)
    lost = 0.5 * erfc((grid.t_end - center) / (sigma * math.sqrt(2.0)))
    lost += 0.5 * erfc((center - grid.t_start) / (sigma * math.sqrt(2.0)))
    if lost > 1e-6:
        raise TruncationError(f"grid truncates {lost:.2e} of the pulse energy")
    t = grid.times
    samples = peak * np.exp(-0.5 * FOUR_LN2 * ((t - center) / fwhm) ** 2)
    return ComplexEnvelope(grid, samples.astype(complex))


def square_pulse_shape(t: np.ndarray, start: float, duration: float, rise: float, dt: float) -> np.ndarray:
    """Unit flat top on [start, start+duration] with raised-cosine edges of width ``rise``.

    For ``rise == 0`` a sample sitting exactly on an edge gets 1/2, so the
    trapezoidal area of the samples equals ``duration`` on aligned grids.
    """
    stop = start + duration
    eps = 1e-9 * dt
    if rise == 0:
        shape = ((t > start + eps) & (t < stop - eps)).astype(float)
        shape[np.abs(t - start) <= eps] = 0.5
        shape[np.abs(t - stop) <= eps] = 0.5
        return shape
    shape = np.zeros_like(t, dtype=float)
    up = (t > start) & (t < start + rise)
    down = (t > stop - rise) & (t < stop)
    flat = (t >= start + rise) & (t <= stop - rise)
    shape[up] = 0.5 * (1.0 - np.cos(np.pi * (t[up] - start) / rise))
    shape[down] = 0.5 * (1.0 - np.cos(np.pi * (stop - t[down]) / rise))
    shape[flat] = 1.0
    return shape


def make_square_pulse(duration: float, start: float, area: float, rise: float, grid: TimeGrid) -> ComplexEnvelope:
    """Flat-top pulse whose trapezoidal time integral equals ``area`` (radians)."""
    if duration <= 0:
        if area != 0:
            raise ValueError("a non-zero area needs a positive duration")
        return ComplexEnvelope.zeros(grid)
    if rise < 0 or duration <= 2 * rise:
        raise ValueError("need duration > 2*rise >= 0")
    shape = square_pulse_shape(grid.times, start, duration, rise, grid.dt)
    norm = np.trapezoid(shape, dx=grid.dt)
    if area != 0 and norm <= 0:
        raise ValueError("pulse falls outside the time grid")
    amp = area / norm if norm > 0 else 0.0
    return ComplexEnvelope(grid, (amp * shape).astype(complex))


def pulse_energy(env: ComplexEnvelope) -> float:
    """Trapezoidal time integral of |E|^2."""
    return float(np.trapezoid(env.intensity, dx=env.grid.dt))


def energy_of(samples: np.ndarray, dt: float) -> float:
    return float(np.trapezoid(np.abs(samples) ** 2, dx=dt))
