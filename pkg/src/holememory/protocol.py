"""Write / store / read sequence and its figures of merit.

A Gaussian input enters the hole, a first Raman pulse maps the optical
coherence onto the spin state, and a second one T_s later maps it back.  The
storage efficiency is the retrieved energy inside the retrieval window over
the input energy.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .analysis import spin_dephasing_factor
from .core import (
    ComplexEnvelope,
    DetuningGrid,
    TimeGrid,
    energy_of,
    make_gaussian_pulse,
    make_square_pulse,
    pulse_energy,
)
from .hole_profile import HoleProfile
from .propagation import PropagationGrids, Propagator, oracle_group_delay

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class InputPulse:
    fwhm_us: float = 3.0
    center_us: float | None = None  # default: 2.5 FWHM after t = 0
    peak: float = 1.0

    @property
    def center(self) -> float:
        return 2.5 * self.fwhm_us if self.center_us is None else self.center_us


@dataclass(frozen=True)
class RamanShape:
    duration_us: float = 1.0
    area: float = 0.85 * math.pi
    rise_us: float = 0.05


@dataclass(frozen=True)
class GridSettings:
    dt_us: float = 0.01
    z_slices: int = 100
    detuning_bins: int = 1200
    detuning_span_mhz: float = 3.0
    z_scheme: str = "midpoint"
    mode: str = "perturbative"

    def propagation_grids(self) -> PropagationGrids:
        det = DetuningGrid.uniform(self.detuning_span_mhz, self.detuning_bins)
        return PropagationGrids(self.z_slices, det, self.z_scheme)


@dataclass(frozen=True)
class SequenceSpec:
    """Input pulse, two identical Raman pulses T_s apart, and the readout window.

    ``raman1_start_us`` defaults to the input centre plus half the linear
    group delay; ``window_us`` defaults to 7 us scaled by FWHM/3 us.
    """

    profile: HoleProfile = field(default_factory=HoleProfile)
    input: InputPulse = field(default_factory=InputPulse)
    raman: RamanShape = field(default_factory=RamanShape)
    raman1_start_us: float | None = None
    storage_time_us: float = 10.0
    window_us: float | None = None
    grid: GridSettings = field(default_factory=GridSettings)
    spin_linewidth_khz: float | None = None

    def __post_init__(self):
        if self.storage_time_us < self.raman.duration_us:
            raise ValueError("storage time must exceed the Raman pulse duration")
        if self.window_us is not None and self.window_us <= 0:
            raise ValueError("retrieval window must be positive")
        if self.raman1_start_us is not None and self.raman1_start_us < self.input.center:
            raise ValueError("first Raman pulse must start after the input peak")

    @property
    def raman1_start(self) -> float:
        if self.raman1_start_us is not None:
            return self.raman1_start_us
        return default_raman1_start(self)

    @property
    def raman2_start(self) -> float:
        return self.raman1_start + self.storage_time_us

    @property
    def retrieval_window(self) -> tuple[float, float]:
        lo = self.raman2_start + self.raman.duration_us
        width = self.window_us if self.window_us is not None else 7.0 * self.input.fwhm_us / 3.0
        return lo, lo + width

    def with_raman1(self, start: float) -> "SequenceSpec":
        return replace(self, raman1_start_us=start)

    def time_grid(self, t_end: float | None = None) -> TimeGrid:
        dt = self.grid.dt_us
        end = self.retrieval_window[1] if t_end is None else t_end
        return TimeGrid(0.0, dt * math.ceil(end / dt - 1e-9), dt)


def default_raman1_start(spec: SequenceSpec) -> float:
    return spec.input.center + 0.5 * oracle_group_delay(spec.profile)


@dataclass(frozen=True)
class StorageResult:
    output: ComplexEnvelope
    input: ComplexEnvelope
    eta_s: float
    leaked: float
    retrieval_window: tuple[float, float]
    raman1_start: float
    spin_energy_after_raman1: float
    between_pulses: float
    output_total: float
    residual_atomic: float
    eta_s_decayed: float | None = None
    snapshots: np.ndarray | None = None

    @property
    def energy_balance(self) -> float:
        """Output plus atomic excitation over input; 1 for exact bookkeeping."""
        return self.output_total + self.residual_atomic


def _envelopes(spec: SequenceSpec, grid: TimeGrid, raman1_start: float):
    inp = make_gaussian_pulse(spec.input.fwhm_us, spec.input.center, spec.input.peak, grid)
    r = spec.raman
    raman = make_square_pulse(r.duration_us, raman1_start, r.area, r.rise_us, grid)
    raman = raman + make_square_pulse(r.duration_us, raman1_start + spec.storage_time_us, r.area, r.rise_us, grid)
    return inp, raman


def _summarise(spec, prop: Propagator, inp: ComplexEnvelope, raman1_start: float, spin_after: float) -> StorageResult:
    res = prop.result()
    out = res.output
    dt = out.grid.dt
    e_in = pulse_energy(inp)
    lo = raman1_start
    r2 = raman1_start + spec.storage_time_us
    w_lo = r2 + spec.raman.duration_us
    width = spec.window_us if spec.window_us is not None else 7.0 * spec.input.fwhm_us / 3.0
    w_hi = w_lo + width
    t = out.times
    eps = 1e-9 * dt
    if w_hi > t[-1] + eps:
        raise ValueError("retrieval window extends past the end of the time grid")
    retrieved = energy_of(out.restricted(w_lo, w_hi), dt) / e_in
    leaked = energy_of(np.where(t < lo - eps, out.samples, 0.0), dt) / e_in
    between = energy_of(out.restricted(lo + spec.raman.duration_us, r2), dt) / e_in
    total = pulse_energy(out) / e_in
    ens = res.final_ensemble
    residual = (ens.optical_energy + ens.spin_energy) / e_in
    decayed = None
    if spec.spin_linewidth_khz is not None:
        decayed = retrieved * spin_dephasing_factor(spec.storage_time_us, spec.spin_linewidth_khz)
    return StorageResult(
        out, inp, retrieved, leaked, (w_lo, w_hi), lo, spin_after / e_in, between, total, residual, decayed, res.snapshots
    )


def run_sequence(spec: SequenceSpec, snapshots: bool = False) -> StorageResult:
    """Simulate the full storage sequence and report its efficiency."""
    r1 = spec.raman1_start
    grid = spec.time_grid()
    inp, raman = _envelopes(spec, grid, r1)
    prop = Propagator(inp, raman, spec.profile, spec.grid.propagation_grids(), spec.grid.mode, snapshots)
    prop.advance(grid.index_of(r1 + spec.raman.duration_us))
    spin_after = prop.state.spin_energy
    prop.advance()
    return _summarise(spec, prop, inp, r1, spin_after)


def run_slow_light(spec: SequenceSpec, t_end: float | None = None) -> tuple[ComplexEnvelope, ComplexEnvelope]:
    """Input and transmitted envelopes without Raman pulses."""
    grid = spec.time_grid(t_end)
    inp = make_gaussian_pulse(spec.input.fwhm_us, spec.input.center, spec.input.peak, grid)
    prop = Propagator(inp, None, spec.profile, spec.grid.propagation_grids(), spec.grid.mode)
    prop.advance()
    return inp, prop.result().output


def search_bracket(spec: SequenceSpec) -> tuple[float, float]:
    """One input-pulse width around the default first-Raman start."""
    c = spec.input.center
    mid = default_raman1_start(spec)
    lo = max(c, mid - 0.5 * spec.input.fwhm_us)
    return lo, lo + spec.input.fwhm_us


def optimize_raman_timing(spec: SequenceSpec, iterations: int = 10) -> tuple[float, float]:
    """Golden-section search of the first Raman start maximising eta_s.

    The run up to the bracket start is shared between candidates through a
    checkpoint.  Returns (best start, best eta_s).
    """
    a, b = search_bracket(spec)
    probe = spec.with_raman1(b)
    grid = probe.time_grid()
    inp = make_gaussian_pulse(spec.input.fwhm_us, spec.input.center, spec.input.peak, grid)
    prop = Propagator(inp, None, spec.profile, spec.grid.propagation_grids(), spec.grid.mode)
    # Raman drive is identically zero before the bracket start
    prop.advance(grid.index_of(a) - 2)
    ckpt = prop.checkpoint()
    seen: dict[float, float] = {}

    def efficiency(r1: float) -> float:
        if r1 not in seen:
            cand = spec.with_raman1(r1)
            _, raman = _envelopes(cand, grid, r1)
            prop.restore(ckpt, raman)
            prop.advance()
            seen[r1] = _summarise(cand, prop, inp, r1, 0.0).eta_s
        return seen[r1]

    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = efficiency(c), efficiency(d)
    for _ in range(iterations):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = efficiency(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = efficiency(d)
    best = max(seen, key=lambda k: (seen[k], -k))
    return best, seen[best]


def run_optimized(spec: SequenceSpec, iterations: int = 10, snapshots: bool = False) -> StorageResult:
    best, _ = optimize_raman_timing(spec, iterations)
    return run_sequence(spec.with_raman1(best), snapshots)


def _map(fn, items, threads: int):
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


@dataclass(frozen=True)
class OdPoint:
    od: float
    eta_s: float
    raman1_start: float


def sweep_od(base: SequenceSpec, od_values, threads: int = 1, iterations: int = 10) -> list[OdPoint]:
    """Efficiency versus optical depth, re-optimising the first Raman start per point."""
    ods = [float(d) for d in od_values]
    if not ods:
        raise ValueError("empty optical-depth list")
    if any(d < 0 for d in ods) or ods != sorted(ods):
        raise ValueError("optical depths must be non-negative and sorted")

    def one(d: float) -> OdPoint:
        spec = replace(base, profile=base.profile.with_od(d), raman1_start_us=None)
        best, eta = optimize_raman_timing(spec, iterations)
        return OdPoint(d, eta, best)

    return _map(one, ods, threads)


@dataclass(frozen=True)
class StoragePoint:
    storage_time_us: float
    eta_s: float


def sweep_storage_time(base: SequenceSpec, ts_values, eta0: float | None = None) -> list[StoragePoint]:
    """Efficiency versus storage time: eta_s(base) times the spin-dephasing factor.

    The decoherence-free propagation does not depend on T_s once the
    unstored light has left, so it is run once at the base storage time.
    """
    ts = [float(t) for t in ts_values]
    if not ts:
        raise ValueError("empty storage-time list")
    if min(ts) < base.raman.duration_us:
        raise ValueError("storage times must exceed the Raman pulse duration")
    gamma = base.spin_linewidth_khz or 0.0
    if eta0 is None:
        eta0 = run_sequence(base).eta_s
    return [StoragePoint(t, eta0 * spin_dephasing_factor(t, gamma)) for t in ts]
