"""Three-level Lambda atom in the rotating frame, integrated with classical RK4.

State vector (cg, ce, cs): ground, excited and spin-storage amplitudes.  The
signal E couples g<->e, the Raman field Omega couples e<->s, and the
excited state carries the inhomogeneous detuning:

    i d/dt (cg, ce, cs) = [[0, E*/2, 0], [E/2, -D, Omega/2], [0, Omega*/2, 0]] (cg, ce, cs)

The spin state has no detuning (two-photon resonance).  In perturbative mode
cg is pinned to 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .core import cubic_midpoints

Mode = Literal["full", "perturbative"]
MODES = ("full", "perturbative")


@dataclass(frozen=True)
class AtomicState:
    cg: complex = 1.0 + 0j
    ce: complex = 0j
    cs: complex = 0j

    @property
    def norm(self) -> float:
        return abs(self.cg) ** 2 + abs(self.ce) ** 2 + abs(self.cs) ** 2

    def as_array(self) -> np.ndarray:
        return np.array([self.cg, self.ce, self.cs], dtype=complex)


@dataclass(frozen=True)
class DriveSample:
    signal: complex = 0j
    raman: complex = 0j
    detuning: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.signal) and np.isfinite(self.raman) and np.isfinite(self.detuning)):
            raise ValueError("drive values must be finite")


def hamiltonian(drive: DriveSample) -> np.ndarray:
    E, O = drive.signal, drive.raman
    return np.array(
        [
            [0.0, np.conj(E) / 2, 0.0],
            [E / 2, -drive.detuning, O / 2],
            [0.0, np.conj(O) / 2, 0.0],
        ],
        dtype=complex,
    )


def _rhs(c: np.ndarray, drive: DriveSample, mode: Mode) -> np.ndarray:
    cg, ce, cs = c
    E, O, D = drive.signal, drive.raman, drive.detuning
    if mode == "perturbative":
        return np.array(
            [0.0, -1j * (0.5 * E - D * ce + 0.5 * O * cs), -0.5j * np.conj(O) * ce],
            dtype=complex,
        )
    return np.array(
        [
            -0.5j * np.conj(E) * ce,
            -1j * (0.5 * E * cg - D * ce + 0.5 * O * cs),
            -0.5j * np.conj(O) * ce,
        ],
        dtype=complex,
    )


def _rk4(c, d0, dm, d1, dt, mode):
    k1 = _rhs(c, d0, mode)
    k2 = _rhs(c + 0.5 * dt * k1, dm, mode)
    k3 = _rhs(c + 0.5 * dt * k2, dm, mode)
    k4 = _rhs(c + dt * k3, d1, mode)
    return c + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def rk4_step(
    state: AtomicState,
    drive_begin: DriveSample,
    drive_mid: DriveSample,
    drive_end: DriveSample,
    dt: float,
    mode: Mode = "full",
) -> AtomicState:
    """One classical RK4 step; the midpoint drive feeds both middle stages."""
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    c = state.as_array()
    if mode == "perturbative":
        c[0] = 1.0
    cg, ce, cs = _rk4(c, drive_begin, drive_mid, drive_end, dt, mode)
    return AtomicState(1.0 + 0j if mode == "perturbative" else complex(cg), complex(ce), complex(cs))


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    cg: np.ndarray
    ce: np.ndarray
    cs: np.ndarray

    @property
    def final(self) -> AtomicState:
        return AtomicState(complex(self.cg[-1]), complex(self.ce[-1]), complex(self.cs[-1]))

    @property
    def norm(self) -> np.ndarray:
        return np.abs(self.cg) ** 2 + np.abs(self.ce) ** 2 + np.abs(self.cs) ** 2


def evolve(
    state0: AtomicState,
    dt: float,
    signal,
    raman=None,
    detuning: float = 0.0,
    mode: Mode = "full",
    *,
    signal_mid=None,
    raman_mid=None,
    t_start: float = 0.0,
) -> Trajectory:
    """Integrate one atom over drives sampled every ``dt``.

    ``signal`` and ``raman`` are complex sample arrays of equal length.
    Midpoint drive values default to cubic interpolation of the samples; pass
    them explicitly when the drive is known analytically.
    """
    sig = np.asarray(signal, dtype=complex)
    ram = np.zeros_like(sig) if raman is None else np.asarray(raman, dtype=complex)
    if sig.shape != ram.shape:
        raise ValueError("signal and raman must have the same length")
    sig_m = cubic_midpoints(sig) if signal_mid is None else np.asarray(signal_mid, dtype=complex)
    ram_m = cubic_midpoints(ram) if raman_mid is None else np.asarray(raman_mid, dtype=complex)
    n = sig.size
    out = np.empty((3, n), dtype=complex)
    c = state0.as_array()
    if mode == "perturbative":
        c[0] = 1.0
    out[:, 0] = c
    for i in range(n - 1):
        d0 = DriveSample(sig[i], ram[i], detuning)
        dm = DriveSample(sig_m[i], ram_m[i], detuning)
        d1 = DriveSample(sig[i + 1], ram[i + 1], detuning)
        c = _rk4(c, d0, dm, d1, dt, mode)
        out[:, i + 1] = c
    times = t_start + dt * np.arange(n)
    return Trajectory(times, out[0], out[1], out[2])
