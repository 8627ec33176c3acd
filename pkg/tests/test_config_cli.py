import csv
import math
from pathlib import Path

import pytest

from holememory import config as cfgmod
from holememory.cli import EXIT_CONFIG, EXIT_OK, main

DATA = Path(__file__).resolve().parents[1] / "data"

COARSE = """\
grid.z_slices = 25
grid.detuning_bins = 300
raman.start_us = 9.5
raman.optimize = false
"""


def test_defaults_round_trip():
    d = cfgmod.defaults()
    text = cfgmod.dumps(d)
    assert cfgmod.loads(text) == d
    assert cfgmod.dumps(cfgmod.loads(text)) == text


def test_modified_round_trip():
    cfg = cfgmod.loads("hole.od = 12.5\nraman.start_us = 10.25\nsweep.od_values = 1, 3\n")
    again = cfgmod.loads(cfgmod.dumps(cfg))
    assert again == cfg
    assert again["sweep.od_values"] == (1.0, 3.0)
    assert again["raman.start_us"] == 10.25


@pytest.mark.parametrize(
    "text, match",
    [
        ("hole.bogus = 1\n", "unknown key"),
        ("hole.od = 3\nhole.od = 4\n", "duplicate key"),
        ("# comment\nhole.od 3\n", ":2:"),
        ("hole.od = nan\n", "finite"),
        ("grid.z_scheme = trapezoid\n", "expected one of"),
        ("sequence.storage_time_us = 0.5\n", "storage time"),
        ("run.threads = 0\n", "threads"),
    ],
)
def test_config_rejections(text, match):
    with pytest.raises(cfgmod.ConfigError, match=match):
        cfgmod.loads(text, "x.cfg")


def test_strength_ratio_extrapolates_od():
    cfg = cfgmod.loads("hole.strength_ratio = 2\n")
    assert cfgmod.profile(cfg).od == pytest.approx(17.4)


def test_help_lists_every_key(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--help"])
    assert exc.value.code == 0
    text = capsys.readouterr().out
    for key in cfgmod.KEYS:
        assert key.name in text


def test_empty_sweep_is_config_error(tmp_path, capsys):
    assert main(["sweep-od", "--values", "", "--out", str(tmp_path)]) == EXIT_CONFIG
    assert "empty sweep" in capsys.readouterr().err


def test_missing_config_file(tmp_path):
    assert main(["--config", str(tmp_path / "nope.cfg"), "photon-stats", "--out", str(tmp_path)]) == EXIT_CONFIG


def test_malformed_trace_reports_line(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("detuning_khz,od\n0,1\n10,x\n")
    assert main(["fit", str(bad), "--out", str(tmp_path)]) == EXIT_CONFIG
    assert "bad.csv:3" in capsys.readouterr().err


def test_photon_stats_needs_signal(tmp_path, capsys):
    assert main(["photon-stats", "--mu-values", "0", "--out", str(tmp_path)]) == EXIT_CONFIG
    assert "no signal points" in capsys.readouterr().err


def read_fit(path):
    with open(path) as fh:
        return {row["parameter"]: float(row["value"]) for row in csv.DictReader(fh)}


def test_fit_bundled_hole_trace(tmp_path):
    assert main(["fit", str(DATA / "hole_trace.csv"), "--out", str(tmp_path)]) == EXIT_OK
    fit = read_fit(tmp_path / "fit.csv")
    assert fit["delta0_khz"] == pytest.approx(230, rel=0.05)
    assert fit["n"] == pytest.approx(3, rel=0.05)
    assert fit["od"] == pytest.approx(8.7, rel=0.05)


def test_fit_bundled_decay_trace(tmp_path):
    assert main(["fit", str(DATA / "decay_trace.csv"), "--kind", "decay", "--out", str(tmp_path)]) == EXIT_OK
    assert read_fit(tmp_path / "fit.csv")["gamma_khz"] == pytest.approx(25.6, rel=0.05)


def photon_outputs(out):
    return {p.name: p.read_bytes() for p in sorted(out.iterdir())}


def test_photon_stats_deterministic(tmp_path):
    runs = []
    for name, threads in (("a", "1"), ("b", "4"), ("c", "1")):
        out = tmp_path / name
        assert main(["photon-stats", "--seed", "5", "--threads", threads, "--out", str(out)]) == EXIT_OK
        runs.append(photon_outputs(out))
    assert runs[0] == runs[1] == runs[2]
    assert {"histogram_mu0.csv", "histogram_mu1.csv", "snr.csv", "mu1.txt"} <= set(runs[0])
    other = tmp_path / "d"
    assert main(["photon-stats", "--seed", "6", "--out", str(other)]) == EXIT_OK
    assert photon_outputs(other)["snr.csv"] != runs[0]["snr.csv"]


def test_photon_stats_snr_near_chain_ratio(tmp_path):
    assert main(["photon-stats", "--out", str(tmp_path)]) == EXIT_OK
    with open(tmp_path / "snr.csv") as fh:
        rows = {float(r["mu_in"]): r for r in csv.DictReader(fh)}
    r = rows[1.0]
    assert abs(float(r["snr"]) - 33.0) < 3 * float(r["snr_sigma"])


def test_sweep_ts_from_config(tmp_path):
    cfgfile = tmp_path / "c.cfg"
    cfgfile.write_text(COARSE)
    out = tmp_path / "o"
    assert main(["--config", str(cfgfile), "sweep-ts", "--values", "2,12.19", "--out", str(out)]) == EXIT_OK
    with open(out / "sweep_ts.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert float(rows[1]["eta_s"]) / float(rows[0]["eta_s"]) == pytest.approx(
        0.5 / math.exp(-((math.pi * 25.6e-3 * 2) ** 2) / (2 * math.log(2))), rel=2e-3
    )


def test_simulate_dark_raman(tmp_path):
    cfgfile = tmp_path / "c.cfg"
    cfgfile.write_text(COARSE)
    out = tmp_path / "o"
    rc = main(["--config", str(cfgfile), "simulate", "--raman-area", "0", "--gnuplot-script", "--out", str(out)])
    assert rc == EXIT_OK
    for name in ("trace.csv", "trace_input.csv", "trace_slow.csv", "summary.csv", "plot_simulate.gp"):
        assert (out / name).exists()
    with open(out / "summary.csv") as fh:
        summary = next(csv.DictReader(fh))
    # with no Raman pulses nothing is stored
    assert float(summary["eta_s"]) < 1e-3
    assert float(summary["energy_balance"]) == pytest.approx(1.0, abs=1e-4)
    assert not list(out.glob("*.tmp*"))
