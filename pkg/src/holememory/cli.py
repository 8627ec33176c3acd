"""Command-line front end.

Exit codes: 0 success, 2 configuration or input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import contextlib
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .analysis import (
    compute_snr,
    fit_decay,
    fit_mu1,
    gaussian_bin_weights,
    half_efficiency_time,
    histogram_edges,
    monte_carlo_counts,
    read_decay,
    write_histogram,
)
from .core import ComplexEnvelope, GridError, TruncationError, make_gaussian_pulse
from .fitting import FitError
from .hole_profile import fit_hole, read_trace
from .propagation import (
    PropagationDivergence,
    compare_oracle,
    oracle_group_delay,
    peak_time,
    write_snapshots,
)
from .protocol import optimize_raman_timing, run_sequence, run_slow_light, sweep_od, sweep_storage_time

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


def num(v: float) -> str:
    return f"{v:.10g}"


@contextlib.contextmanager
def atomic_path(path: Path):
    """Yield a temporary path next to ``path``; rename onto it on success."""
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    os.close(fd)
    try:
        yield Path(tmp)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def write_text(path: Path, text: str) -> None:
    with atomic_path(path) as tmp:
        with open(tmp, "w", newline="\n") as fh:
            fh.write(text)


def write_csv(path: Path, header: str, rows) -> None:
    lines = [header] + [",".join(r) for r in rows]
    write_text(path, "\n".join(lines) + "\n")


def write_trace_csv(path: Path, env: ComplexEnvelope) -> None:
    rows = (
        (f"{t:.6f}", num(v.real), num(v.imag), num(abs(v) ** 2))
        for t, v in zip(env.times, env.samples)
    )
    write_csv(path, "t_us,re_e,im_e,intensity", rows)


# ---------------------------------------------------------------- commands


def _resolve_raman_start(spec, cfg):
    if spec.raman1_start_us is not None:
        return spec
    if cfg["raman.optimize"] and spec.raman.area != 0:
        best, _ = optimize_raman_timing(spec, cfg["raman.search_iterations"])
        return spec.with_raman1(best)
    return spec.with_raman1(spec.raman1_start)


GNUPLOT = {
    "simulate": """set datafile separator ','
set xlabel 'time (us)'
set ylabel 'intensity (rad/us)^2'
plot 'trace_input.csv' using 1:4 skip 1 with lines title 'input', \\
     'trace_slow.csv' using 1:4 skip 1 with lines title 'slow light', \\
     'trace.csv' using 1:4 skip 1 with lines title 'stored'
""",
    "sweep-od": """set datafile separator ','
set xlabel 'optical depth'
set ylabel 'storage efficiency'
plot 'sweep_od.csv' using 1:2 skip 1 with linespoints notitle
""",
    "sweep-ts": """set datafile separator ','
set xlabel 'storage time (us)'
set ylabel 'storage efficiency'
plot 'sweep_ts.csv' using 1:2 skip 1 with linespoints notitle
""",
}


def cmd_simulate(cfg, args, out: Path) -> int:
    if args.raman_area is not None:
        cfg["raman.area_pi"] = args.raman_area
        cfgmod.validate(cfg)
    spec = _resolve_raman_start(cfgmod.sequence(cfg), cfg)
    res = run_sequence(spec, snapshots=args.snapshots)
    inp, slow = run_slow_light(spec, res.output.grid.t_end)
    delay = peak_time(slow) - peak_time(inp)
    write_trace_csv(out / "trace.csv", res.output)
    write_trace_csv(out / "trace_input.csv", inp)
    write_trace_csv(out / "trace_slow.csv", slow)
    decayed = res.eta_s_decayed
    summary = {
        "eta_s": res.eta_s,
        "eta_s_decayed": math.nan if decayed is None else decayed,
        "leaked": res.leaked,
        "delay_us": delay,
        "raman1_start_us": res.raman1_start,
        "storage_time_us": spec.storage_time_us,
        "window_lo_us": res.retrieval_window[0],
        "window_hi_us": res.retrieval_window[1],
        "spin_after_raman1": res.spin_energy_after_raman1,
        "energy_balance": res.energy_balance,
    }
    write_csv(out / "summary.csv", ",".join(summary), [[num(v) for v in summary.values()]])
    if args.snapshots:
        with atomic_path(out / "snapshots.csv") as tmp:
            write_snapshots(tmp, res)
    if args.gnuplot_script:
        write_text(out / "plot_simulate.gp", GNUPLOT["simulate"])
    for k, v in summary.items():
        print(f"{k} = {num(v)}")
    return EXIT_OK


def _values(args, cfg, key):
    vals = cfgmod.parse_float_list(args.values) if args.values is not None else cfg[key]
    if not vals:
        raise cfgmod.ConfigError(f"empty sweep list ({key})")
    return vals


def cmd_sweep_od(cfg, args, out: Path) -> int:
    ods = _values(args, cfg, "sweep.od_values")
    spec = cfgmod.sequence(cfg)
    pts = sweep_od(spec, ods, threads=cfg["run.threads"], iterations=cfg["raman.search_iterations"])
    write_csv(out / "sweep_od.csv", "od,eta_s", ([num(p.od), num(p.eta_s)] for p in pts))
    if args.gnuplot_script:
        write_text(out / "plot_sweep_od.gp", GNUPLOT["sweep-od"])
    for p in pts:
        print(f"od={num(p.od)} eta_s={num(p.eta_s)} raman1_start_us={num(p.raman1_start)}")
    return EXIT_OK


def cmd_sweep_ts(cfg, args, out: Path) -> int:
    ts = _values(args, cfg, "sweep.ts_values")
    spec = _resolve_raman_start(cfgmod.sequence(cfg), cfg)
    pts = sweep_storage_time(spec, ts)
    write_csv(out / "sweep_ts.csv", "ts_us,eta_s", ([num(p.storage_time_us), num(p.eta_s)] for p in pts))
    if args.gnuplot_script:
        write_text(out / "plot_sweep_ts.gp", GNUPLOT["sweep-ts"])
    for p in pts:
        print(f"ts_us={num(p.storage_time_us)} eta_s={num(p.eta_s)}")
    gamma = spec.spin_linewidth_khz or 0.0
    print(f"half_efficiency_ts_us = {num(half_efficiency_time(gamma))}")
    return EXIT_OK


def cmd_fit(cfg, args, out: Path) -> int:
    if args.kind == "hole":
        trace = read_trace(args.trace)
        prof, rep = fit_hole(trace, cfgmod.profile(cfg))
        names = ("delta0_khz", "n", "od")
        values = (prof.delta0_khz, prof.n, prof.od)
    else:
        curve = read_decay(args.trace)
        fit = fit_decay(curve)
        rep = fit.report
        names = ("eta0", "gamma_khz")
        values = (fit.eta0, fit.gamma_khz)
    err = rep.stderr
    write_csv(out / "fit.csv", "parameter,value,stderr", ([n, num(v), num(e)] for n, v, e in zip(names, values, err)))
    for n, v, e in zip(names, values, err):
        print(f"{n} = {num(v)} +- {num(e)}")
    print(f"residual_norm = {num(rep.residual_norm)}  iterations = {rep.iterations}  method = {rep.method}")
    return EXIT_OK


def cmd_photon_stats(cfg, args, out: Path) -> int:
    chain = cfgmod.photon_chain(cfg)
    mus = cfgmod.parse_float_list(args.mu_values) if args.mu_values is not None else cfg["photon.mu_in_values"]
    signal_mus = [m for m in mus if m > 0]
    if not signal_mus:
        raise cfgmod.ConfigError("no signal points: need at least one mu_in > 0")
    trials = cfg["photon.trials_per_preparation"] * cfg["photon.preparations"]
    window = (0.0, chain.window_us)
    edges = histogram_edges(window, cfg["photon.bin_width_us"])
    weights = gaussian_bin_weights(edges, 0.5 * chain.window_us, cfg["input.fwhm_us"])
    seed, threads = cfg["run.seed"], cfg["run.threads"]
    common = dict(bin_width_us=cfg["photon.bin_width_us"], signal_weights=weights, threads=threads)
    noise = monte_carlo_counts(0.0, chain.noise_mean(), trials, window, [seed, 0], **common)
    write_histogram_atomic(out / "histogram_mu0.csv", noise)
    reports = []
    for i, mu in enumerate(signal_mus, 1):
        hist = monte_carlo_counts(chain.signal_mean(mu), chain.noise_mean(), trials, window, [seed, i], mu_in=mu, **common)
        write_histogram_atomic(out / f"histogram_mu{mu:g}.csv", hist)
        reports.append(compute_snr(hist, noise))
    mu1, mu1_sigma = fit_mu1(reports)
    write_csv(
        out / "snr.csv",
        "mu_in,snr,snr_sigma,signal_mean,noise_mean,window_us",
        ([num(r.mu_in), num(r.snr), num(r.snr_sigma), num(r.signal_mean), num(r.noise_mean), num(r.window_us)] for r in reports),
    )
    write_text(out / "mu1.txt", f"mu1 = {num(mu1)} +- {num(mu1_sigma)}\n")
    for r in reports:
        print(f"mu_in={num(r.mu_in)} snr={num(r.snr)} +- {num(r.snr_sigma)}")
    print(f"mu1 = {num(mu1)} +- {num(mu1_sigma)}")
    return EXIT_OK


def write_histogram_atomic(path: Path, hist) -> None:
    with atomic_path(path) as tmp:
        write_histogram(tmp, hist)


def cmd_oracle_check(cfg, args, out: Path) -> int:
    spec = cfgmod.sequence(cfg)
    prof = spec.profile
    tau = oracle_group_delay(prof)
    c = spec.input.center
    grid = spec.time_grid(c + 2.5 * spec.input.fwhm_us + 3.0 * max(tau, 0.0))
    inp = make_gaussian_pulse(spec.input.fwhm_us, c, spec.input.peak, grid)
    rep = compare_oracle(inp, prof, spec.grid.propagation_grids())
    td, ref = rep.time_domain, rep.oracle
    rows = (
        (f"{t:.6f}", num(a.real), num(a.imag), num(b.real), num(b.imag))
        for t, a, b in zip(grid.times, td.samples, ref.samples)
    )
    write_csv(out / "oracle.csv", "t_us,re_sim,im_sim,re_oracle,im_oracle", rows)
    print(f"relative_rms = {num(rep.relative_rms)}")
    print(f"max_deviation = {num(rep.max_deviation)}")
    print(f"group_delay_oracle_us = {num(tau)}")
    print(f"peak_delay_sim_us = {num(peak_time(td) - peak_time(inp))}")
    print(f"peak_delay_oracle_us = {num(peak_time(ref) - peak_time(inp))}")
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "sweep-od": cmd_sweep_od,
    "sweep-ts": cmd_sweep_ts,
    "fit": cmd_fit,
    "photon-stats": cmd_photon_stats,
    "oracle-check": cmd_oracle_check,
}


def _global_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    d = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", metavar="PATH", default=d, help="key = value configuration file")
    parser.add_argument("--seed", type=int, default=d, help="random seed (overrides run.seed)")
    parser.add_argument("--out", metavar="DIR", default=d, help="output directory (default: .)")
    parser.add_argument("--threads", type=int, default=d, help="worker threads (overrides run.threads)")


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.RawDescriptionHelpFormatter
    epilog = cfgmod.key_table()
    p = argparse.ArgumentParser(prog="holememory", description=__doc__.strip().splitlines()[0], epilog=epilog, formatter_class=fmt)
    _global_flags(p, suppress=False)
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name, help_):
        sp = sub.add_parser(name, help=help_, description=help_, epilog=epilog, formatter_class=fmt)
        _global_flags(sp, suppress=True)
        return sp

    sp = add("simulate", "run the write/store/read sequence and the slow-light reference")
    sp.add_argument("--raman-area", type=float, default=None, metavar="PI", help="Raman pulse area in units of pi")
    sp.add_argument("--snapshots", action="store_true", help="also write the (t, z) field map")
    sp.add_argument("--gnuplot-script", action="store_true", help="write a gnuplot script for the traces")
    for name, what in (("sweep-od", "optical depths"), ("sweep-ts", "storage times in us")):
        sp = add(name, f"storage efficiency versus {what.split(' in ')[0]}")
        sp.add_argument("--values", default=None, help=f"comma-separated {what}")
        sp.add_argument("--gnuplot-script", action="store_true", help="write a gnuplot script")
    sp = add("fit", "fit a hole absorption trace or a storage decay curve")
    sp.add_argument("trace", help="CSV file (detuning_khz,od or ts_us,eta_s)")
    sp.add_argument("--kind", choices=("hole", "decay"), default="hole")
    sp = add("photon-stats", "Monte-Carlo photon counting, SNR and mu1")
    sp.add_argument("--mu-values", default=None, help="comma-separated mean input photon numbers")
    add("oracle-check", "compare slow-light propagation with the frequency-domain oracle")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = cfgmod.load(args.config) if args.config else cfgmod.defaults()
        if args.seed is not None:
            cfg["run.seed"] = args.seed
        if args.threads is not None:
            cfg["run.threads"] = args.threads
        cfgmod.validate(cfg)
        out = Path(args.out or ".")
        out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](cfg, args, out)
    except (cfgmod.ConfigError, GridError, TruncationError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (PropagationDivergence, FitError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
