"""Signal propagation through the hole-burnt ensemble.

Time-domain route: in the retarded frame the envelope obeys
dE/dz = -i*kappa*P with P = sum_k w_k g(D_k) ce_k (times cg* in full mode),
marched along z with Euler steps and coupled to RK4 atomic updates.  With
kappa = d/pi a weak cw probe at detuning D is attenuated as exp(-d*g(D)) in
intensity, which fixes the coupling constant.

Frequency-domain route (Omega = 0 only): the linear transfer function
H(w) = exp(-(d/2) [g(w) + i*Hilbert{g}(w)]), evaluated by direct
principal-value quadrature.  The two routes share nothing but the lineshape.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy.integrate import quad

from . import _kernels
from .core import (
    ComplexEnvelope,
    DetuningGrid,
    GridError,
    angular_to_khz,
    cubic_midpoints,
    energy_of,
)
from .hole_profile import HoleProfile, g

ZScheme = Literal["midpoint", "euler"]
_CENTRE = {"midpoint": 0.5, "euler": 0.0}


class PropagationDivergence(RuntimeError):
    def __init__(self, message: str, last_stable_index: int):
        super().__init__(message)
        self.last_stable_index = last_stable_index


class OracleRangeError(ValueError):
    pass


@dataclass(frozen=True)
class PropagationGrids:
    z_slices: int = 100
    detuning: DetuningGrid = field(default_factory=DetuningGrid.uniform)
    z_scheme: ZScheme = "midpoint"

    def __post_init__(self):
        if self.z_slices < 1:
            raise GridError("need at least one z slice")
        if self.z_scheme not in _CENTRE:
            raise GridError(f"unknown z scheme {self.z_scheme!r}")


@dataclass
class AtomicEnsembleState:
    """Amplitudes on the (slice, bin) grid.

    Only bins with non-zero absorption weight are evolved; ``active`` maps
    columns back to the detuning grid.  ``cg`` is None in perturbative mode.
    """

    ce: np.ndarray
    cs: np.ndarray
    cg: np.ndarray | None
    active: np.ndarray
    coupling: np.ndarray  # w_k * g(D_k) for active bins
    kappa: float

    def copy(self) -> "AtomicEnsembleState":
        return AtomicEnsembleState(
            self.ce.copy(),
            self.cs.copy(),
            None if self.cg is None else self.cg.copy(),
            self.active,
            self.coupling,
            self.kappa,
        )

    def _energy(self, amp: np.ndarray) -> float:
        # 2*kappa*dz*sum w g |c|^2 is the field energy the atoms absorbed
        nz = amp.shape[0]
        return float(2.0 * self.kappa / nz * np.sum(np.abs(amp) ** 2 @ self.coupling))

    @property
    def optical_energy(self) -> float:
        return self._energy(self.ce)

    @property
    def spin_energy(self) -> float:
        return self._energy(self.cs)


@dataclass(frozen=True)
class PropagationResult:
    output: ComplexEnvelope
    final_ensemble: AtomicEnsembleState
    snapshots: np.ndarray | None = None  # (count, z_slices + 1) complex field


def _drive_arrays(env: ComplexEnvelope | None, count: int):
    if env is None:
        z = np.zeros(count, dtype=complex)
        return z, z[:-1]
    return np.ascontiguousarray(env.samples), np.ascontiguousarray(cubic_midpoints(env.samples))


class Propagator:
    """Stepwise integrator; lets callers checkpoint and resume a run.

    The z scheme marches the field with Euler steps; ``midpoint`` drives each
    slice with its centre field, ``euler`` with its entrance field.
    """

    def __init__(
        self,
        input_env: ComplexEnvelope,
        raman: ComplexEnvelope | None,
        profile: HoleProfile,
        grids: PropagationGrids | None = None,
        mode: str = "perturbative",
        snapshots: bool = False,
    ):
        grids = grids or PropagationGrids()
        if mode not in ("perturbative", "full"):
            raise ValueError(f"unknown mode {mode!r}")
        if raman is not None and raman.grid != input_env.grid:
            raise GridError("input and Raman envelopes must share a time grid")
        self.grid = input_env.grid
        self.profile = profile
        self.grids = grids
        self.mode = mode
        n = self.grid.count
        self._e, self._em = _drive_arrays(input_env, n)
        self._o, self._om = _drive_arrays(raman, n)
        rate = max(grids.detuning.max_abs, float(np.max(np.abs(self._o))))
        if mode == "full":
            rate = max(rate, float(np.max(np.abs(self._e))))
        self.grid.check_resolution(rate)

        det = grids.detuning
        gk = g(angular_to_khz(det.detunings), profile)
        active = np.flatnonzero((gk > 0) & (det.weights > 0)) if profile.od > 0 else np.array([], dtype=int)
        coupling = np.ascontiguousarray((det.weights * gk)[active])
        self._dk = np.ascontiguousarray(det.detunings[active])
        self._wg = coupling
        self._kdz = profile.od / math.pi / grids.z_slices
        self._centre = _CENTRE[grids.z_scheme]
        shape = (grids.z_slices, active.size)
        self.state = AtomicEnsembleState(
            np.zeros(shape, complex),
            np.zeros(shape, complex),
            np.ones(shape, complex) if mode == "full" else None,
            active,
            coupling,
            profile.od / math.pi,
        )
        self.index = 0
        self.output = np.zeros(n, dtype=complex)
        self.snapshots = np.zeros((n, grids.z_slices + 1), complex) if snapshots else None
        self._no_snap = np.zeros(0, complex)

    def checkpoint(self):
        return self.index, self.state.copy(), self.output.copy()

    def restore(self, ckpt, raman: ComplexEnvelope | None = None):
        """Rewind to a checkpoint, optionally swapping the Raman drive from there on."""
        self.index, state, out = ckpt
        self.state = state.copy()
        self.output = out.copy()
        if raman is not None:
            if raman.grid != self.grid:
                raise GridError("Raman envelope on a different grid")
            self._o, self._om = _drive_arrays(raman, self.grid.count)
            self.grid.check_resolution(max(self.grids.detuning.max_abs, float(np.max(np.abs(self._o)))))

    def _field(self, i: int) -> complex:
        st = self.state
        snap = self.snapshots[i] if self.snapshots is not None else self._no_snap
        cg = st.cg if st.cg is not None else np.zeros((0, 0), complex)
        return _kernels.field_profile(st.ce, cg, self._e[i], self._wg, self._kdz, snap)

    def advance(self, stop: int | None = None) -> None:
        """Record output samples and step until sample ``stop`` is recorded."""
        n = self.grid.count
        stop = n - 1 if stop is None else min(stop, n - 1)
        st = self.state
        h = self.grid.dt
        e, em, o, om = self._e, self._em, self._o, self._om
        while self.index <= stop:
            i = self.index
            if i == n - 1 or self.snapshots is not None or not st.ce.shape[1]:
                val = self._field(i)
            if i < n - 1 and st.ce.shape[1]:
                if st.cg is None:
                    val = _kernels.step_perturbative(
                        st.ce, st.cs, e[i], em[i], e[i + 1], o[i], om[i], o[i + 1],
                        self._dk, self._wg, self._kdz, h, self._centre,
                    )
                else:
                    val = _kernels.step_full(
                        st.cg, st.ce, st.cs, e[i], em[i], e[i + 1], o[i], om[i], o[i + 1],
                        self._dk, self._wg, self._kdz, h, self._centre,
                    )
            if not np.isfinite(val):
                raise PropagationDivergence(f"non-finite field at sample {i}", max(i - 1, 0))
            self.output[i] = val
            self.index += 1

    def result(self) -> PropagationResult:
        if self.index < self.grid.count:
            self.advance()
        return PropagationResult(ComplexEnvelope(self.grid, self.output), self.state, self.snapshots)


def propagate(
    input_env: ComplexEnvelope,
    raman: ComplexEnvelope | None,
    profile: HoleProfile,
    grids: PropagationGrids | None = None,
    mode: str = "perturbative",
    snapshots: bool = False,
) -> PropagationResult:
    """Propagate ``input_env`` through the medium under Raman drive ``raman``."""
    prop = Propagator(input_env, raman, profile, grids, mode, snapshots)
    prop.advance()
    return prop.result()


def write_snapshots(path, result: PropagationResult) -> None:
    """Dump the (t, z) field map as ``t_us,z_norm,re_e,im_e``."""
    if result.snapshots is None:
        raise ValueError("propagation was run without snapshots")
    snaps = result.snapshots
    t = result.output.times
    z = np.linspace(0.0, 1.0, snaps.shape[1])
    with open(path, "w", newline="") as fh:
        fh.write("t_us,z_norm,re_e,im_e\n")
        for i in range(snaps.shape[0]):
            for j in range(snaps.shape[1]):
                v = snaps[i, j]
                fh.write(f"{t[i]!r},{z[j]!r},{v.real!r},{v.imag!r}\n")


# --- frequency-domain oracle -------------------------------------------------


def hilbert_g(freq_khz, profile: HoleProfile) -> np.ndarray:
    """Hilbert transform (1/pi) PV int g(y)/(f - y) dy of the lineshape.

    g = 1_F - L*1_F on the feature F = [-a, a]: the indicator transforms in
    closed form, the dip L by adaptive Cauchy-weighted quadrature.
    """
    f = np.atleast_1d(np.asarray(freq_khz, dtype=float))
    a = profile.half_feature_khz
    d0, n = profile.delta0_khz, profile.n

    def dip(y):
        return 1.0 / (1.0 + abs(2.0 * y / d0) ** n)

    out = np.empty_like(f)
    for i, x in enumerate(f):
        if abs(abs(x) - a) < 1e-9 * a:
            x = x * (1 + 1e-9)
        indicator = math.log(abs((x + a) / (x - a))) / math.pi
        if abs(x) < a:
            pv = quad(dip, -a, a, weight="cauchy", wvar=x, limit=400)[0]
            dip_h = -pv / math.pi
        else:
            dip_h = quad(lambda y: dip(y) / (x - y), -a, a, limit=400, points=[0.0])[0] / math.pi
        out[i] = indicator - dip_h
    return out


def linear_transfer_oracle(profile: HoleProfile, omega) -> np.ndarray:
    """H(w) for a field component exp(-i w t), w in rad/us."""
    f = angular_to_khz(np.asarray(omega, dtype=float))
    if profile.od == 0:
        return np.ones_like(f, dtype=complex)
    return np.exp(-0.5 * profile.od * (g(f, profile) + 1j * hilbert_g(f, profile)))


def oracle_group_delay(profile: HoleProfile, step_khz: float | None = None) -> float:
    """Group delay (us) at the hole centre from the phase slope of H."""
    h = step_khz or 1e-3 * profile.delta0_khz
    hp, hm = hilbert_g(np.array([h, -h]), profile)
    slope = (hp - hm) / (2.0 * h) * (1e3 / (2.0 * math.pi))  # per rad/us
    return -0.5 * profile.od * slope


def oracle_output(
    input_env: ComplexEnvelope,
    profile: HoleProfile,
    pad_factor: int = 8,
    band_khz: float | None = None,
) -> ComplexEnvelope:
    """Output envelope predicted by the linear transfer function.

    H is evaluated on FFT frequencies within ``band_khz`` (default: twice
    the feature width) and set to 1 outside; the band must hold all but 1e-6 of
    the input energy.
    """
    x = input_env.samples
    n = x.size
    m = pad_factor * n
    dt = input_env.grid.dt
    spec = np.fft.fft(x, m)
    # numpy's inverse transform uses exp(+i*w*t): component w_fft is physical -w_fft
    f_phys = -np.fft.fftfreq(m, dt) * 1e3  # kHz
    band = band_khz if band_khz is not None else 2000.0 * profile.feature_width_mhz
    inside = np.abs(f_phys) <= band
    power = np.abs(spec) ** 2
    total = power.sum()
    if total > 0 and power[inside].sum() < (1.0 - 1e-6) * total:
        raise OracleRangeError("frequency band too narrow for the input spectrum")
    H = np.ones(m, dtype=complex)
    sig = inside & (power > 1e-30 * max(total, 1e-300))
    H[sig] = linear_transfer_oracle(profile, f_phys[sig] * 2e-3 * math.pi)
    y = np.fft.ifft(spec * H)[:n]
    return ComplexEnvelope(input_env.grid, y)


@dataclass(frozen=True)
class OracleReport:
    relative_rms: float
    max_deviation: float
    energy_time_domain: float
    energy_oracle: float
    time_domain: ComplexEnvelope | None = None
    oracle: ComplexEnvelope | None = None


def compare_oracle(
    input_env: ComplexEnvelope,
    profile: HoleProfile,
    grids: PropagationGrids | None = None,
    oracle: ComplexEnvelope | None = None,
) -> OracleReport:
    """Relative RMS and max deviation between ``propagate`` (Omega = 0) and the oracle."""
    td_env = propagate(input_env, None, profile, grids).output
    ref_env = oracle or oracle_output(input_env, profile)
    td, ref = td_env.samples, ref_env.samples
    denom = np.linalg.norm(ref)
    diff = td - ref
    rel = float(np.linalg.norm(diff) / denom) if denom > 0 else float(np.linalg.norm(diff))
    dt = input_env.grid.dt
    return OracleReport(rel, float(np.max(np.abs(diff))), energy_of(td, dt), energy_of(ref, dt), td_env, ref_env)


def peak_time(env: ComplexEnvelope) -> float:
    """Time of the intensity maximum, refined by a parabola through three samples."""
    inten = env.intensity
    i = int(np.argmax(inten))
    t = env.times
    if 0 < i < inten.size - 1:
        y0, y1, y2 = inten[i - 1], inten[i], inten[i + 1]
        den = y0 - 2 * y1 + y2
        if den != 0:
            return float(t[i] + 0.5 * env.grid.dt * (y0 - y2) / den)
    return float(t[i])
