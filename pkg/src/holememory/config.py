"""Flat ``section.key = value`` run configuration.

Every accepted key is listed in KEYS with its default and unit; anything else
is rejected.  ``dumps(loads(text))`` is canonical, so load -> dump -> load is
the identity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

from .analysis import PhotonChain
from .hole_profile import HoleProfile, extrapolate_od
from .protocol import GridSettings, InputPulse, RamanShape, SequenceSpec


class ConfigError(ValueError):
    pass


AUTO = "auto"


def _float(s: str) -> float:
    v = float(s)
    if not math.isfinite(v):
        raise ValueError("must be finite")
    return v


def _opt_float(s: str):
    return None if s.strip().lower() in (AUTO, "none", "") else _float(s)


def _int(s: str) -> int:
    return int(s)


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("true", "yes", "1", "on"):
        return True
    if v in ("false", "no", "0", "off"):
        return False
    raise ValueError("expected true/false")


def parse_float_list(s: str) -> tuple[float, ...]:
    parts = [p for p in (x.strip() for x in s.split(",")) if p]
    return tuple(_float(p) for p in parts)


def _choice(*options: str) -> Callable[[str], str]:
    def parse(s: str) -> str:
        v = s.strip()
        if v not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return v

    return parse


def _fmt(v: Any) -> str:
    if v is None:
        return AUTO
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, tuple):
        return ", ".join(_fmt(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


@dataclass(frozen=True)
class Key:
    name: str
    parse: Callable[[str], Any]
    default: Any
    unit: str
    help: str


KEYS: tuple[Key, ...] = (
    Key("hole.delta0_khz", _float, 230.0, "kHz", "hole width"),
    Key("hole.n", _float, 3.0, "-", "hyperlorentzian exponent"),
    Key("hole.od", _float, 8.7, "-", "optical depth alpha*L of the feature"),
    Key("hole.strength_ratio", _float, 1.0, "-", "oscillator-strength scaling applied to hole.od"),
    Key("hole.feature_width_mhz", _float, 2.1, "MHz", "width of the absorbing feature"),
    Key("input.fwhm_us", _float, 3.0, "us", "input intensity FWHM"),
    Key("input.center_us", _opt_float, None, "us", "input peak time (auto: 2.5 FWHM)"),
    Key("input.peak", _float, 1.0, "rad/us", "input peak Rabi frequency"),
    Key("raman.duration_us", _float, 1.0, "us", "Raman pulse length"),
    Key("raman.area_pi", _float, 0.85, "pi rad", "Raman pulse area"),
    Key("raman.rise_us", _float, 0.05, "us", "raised-cosine edge width"),
    Key("raman.start_us", _opt_float, None, "us", "first Raman start (auto: optimised)"),
    Key("raman.optimize", _bool, True, "-", "golden-section search of the first Raman start when auto"),
    Key("raman.search_iterations", _int, 10, "-", "golden-section iterations"),
    Key("sequence.storage_time_us", _float, 10.0, "us", "delay between the Raman pulses"),
    Key("sequence.window_us", _opt_float, None, "us", "retrieval window length (auto: 7 us * FWHM/3 us)"),
    Key("sequence.spin_linewidth_khz", _opt_float, 25.6, "kHz", "spin inhomogeneous FWHM for dephasing"),
    Key("grid.dt_us", _float, 0.01, "us", "time step"),
    Key("grid.z_slices", _int, 100, "-", "slices along the crystal"),
    Key("grid.detuning_bins", _int, 1200, "-", "inhomogeneous detuning bins"),
    Key("grid.detuning_span_mhz", _float, 3.0, "MHz", "total detuning span"),
    Key("grid.z_scheme", _choice("midpoint", "euler"), "midpoint", "-", "field used to drive each slice"),
    Key("grid.mode", _choice("perturbative", "full"), "perturbative", "-", "atomic model"),
    Key("sweep.od_values", parse_float_list, (2.0, 4.0, 6.0, 8.0, 10.0, 12.0), "-", "optical depths for sweep-od"),
    Key("sweep.ts_values", parse_float_list, (2.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0), "us", "storage times for sweep-ts"),
    Key("photon.retrieval_efficiency", _float, 0.297, "-", "retrieved photons per input photon in the window"),
    Key("photon.path_transmission", _float, 0.15, "-", "memory-to-detector transmission"),
    Key("photon.detector_efficiency", _float, 1.0, "-", "detector efficiency"),
    Key("photon.noise_per_us", _float, 2.25e-3, "photons/us", "unconditional noise floor"),
    Key("photon.window_us", _float, 4.0, "us", "detection window"),
    Key("photon.bin_width_us", _float, 0.1, "us", "histogram bin width"),
    Key("photon.mu_in_values", parse_float_list, (0.25, 0.5, 1.0, 2.0), "photons", "mean input photon numbers"),
    Key("photon.trials_per_preparation", _int, 1000, "-", "trials per memory preparation"),
    Key("photon.preparations", _int, 100, "-", "memory preparations per input level"),
    Key("run.seed", _int, 0, "-", "random seed"),
    Key("run.threads", _int, 1, "-", "worker threads"),
)
KEY_INDEX = {k.name: k for k in KEYS}


def defaults() -> dict[str, Any]:
    return {k.name: k.default for k in KEYS}


def loads(text: str, source: str = "<config>") -> dict[str, Any]:
    cfg = defaults()
    seen: set[str] = set()
    for num, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        name, sep, value = line.partition("=")
        name = name.strip()
        if not sep:
            raise ConfigError(f"{source}:{num}: expected 'key = value'")
        if name not in KEY_INDEX:
            raise ConfigError(f"{source}:{num}: unknown key {name!r}")
        if name in seen:
            raise ConfigError(f"{source}:{num}: duplicate key {name!r}")
        seen.add(name)
        try:
            cfg[name] = KEY_INDEX[name].parse(value.strip())
        except ValueError as exc:
            raise ConfigError(f"{source}:{num}: {name}: {exc}") from None
    validate(cfg)
    return cfg


def load(path) -> dict[str, Any]:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    return loads(text, str(p))


def dumps(cfg: dict[str, Any]) -> str:
    lines = []
    section = None
    for k in KEYS:
        sec = k.name.split(".", 1)[0]
        if sec != section:
            if section is not None:
                lines.append("")
            section = sec
        lines.append(f"{k.name} = {_fmt(cfg[k.name])}")
    return "\n".join(lines) + "\n"


def set_value(cfg: dict[str, Any], name: str, value: Any) -> None:
    if name not in KEY_INDEX:
        raise ConfigError(f"unknown key {name!r}")
    cfg[name] = value


def key_table() -> str:
    """Human-readable listing of every key, its default and unit."""
    width = max(len(k.name) for k in KEYS)
    rows = [f"  {k.name:<{width}}  [{k.unit}]  {k.help} (default: {_fmt(k.default)})" for k in KEYS]
    return "config keys:\n" + "\n".join(rows)


def profile(cfg) -> HoleProfile:
    od = extrapolate_od(cfg["hole.od"], cfg["hole.strength_ratio"])
    return HoleProfile(cfg["hole.delta0_khz"], cfg["hole.n"], od, cfg["hole.feature_width_mhz"])


def sequence(cfg) -> SequenceSpec:
    grid = GridSettings(
        cfg["grid.dt_us"],
        cfg["grid.z_slices"],
        cfg["grid.detuning_bins"],
        cfg["grid.detuning_span_mhz"],
        cfg["grid.z_scheme"],
        cfg["grid.mode"],
    )
    return SequenceSpec(
        profile=profile(cfg),
        input=InputPulse(cfg["input.fwhm_us"], cfg["input.center_us"], cfg["input.peak"]),
        raman=RamanShape(cfg["raman.duration_us"], cfg["raman.area_pi"] * math.pi, cfg["raman.rise_us"]),
        raman1_start_us=cfg["raman.start_us"],
        storage_time_us=cfg["sequence.storage_time_us"],
        window_us=cfg["sequence.window_us"],
        grid=grid,
        spin_linewidth_khz=cfg["sequence.spin_linewidth_khz"],
    )


def photon_chain(cfg) -> PhotonChain:
    return PhotonChain(
        cfg["photon.retrieval_efficiency"],
        cfg["photon.path_transmission"],
        cfg["photon.detector_efficiency"],
        cfg["photon.noise_per_us"],
        cfg["photon.window_us"],
    )


def validate(cfg) -> None:
    """Build every domain object once so physical invariants are checked at load time."""
    try:
        sequence(cfg)
        photon_chain(cfg)
        if cfg["grid.z_slices"] < 1 or cfg["grid.detuning_bins"] < 2:
            raise ValueError("grid sizes must be positive")
        if cfg["raman.search_iterations"] < 0:
            raise ValueError("search iterations must be >= 0")
        if cfg["photon.trials_per_preparation"] < 1 or cfg["photon.preparations"] < 1:
            raise ValueError("trial counts must be positive")
        if any(m < 0 for m in cfg["photon.mu_in_values"]):
            raise ValueError("mu_in values must be non-negative")
        if cfg["run.threads"] < 1:
            raise ValueError("threads must be >= 1")
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
