import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from holememory.fitting import DegenerateDataError
from holememory.hole_profile import (
    AbsorptionTrace,
    HoleProfile,
    extrapolate_od,
    fit_hole,
    g,
    read_trace,
    write_trace,
)

TRUTH = HoleProfile(230.0, 3.0, 8.7)
DET = np.arange(-1000.0, 1000.0 + 1e-9, 10.0)


def test_g_reference_values():
    assert g(0.0, TRUTH) == 0.0
    assert g(115.0, TRUTH) == pytest.approx(0.5, abs=1e-15)
    assert g(230.0, TRUTH) == pytest.approx(8.0 / 9.0, abs=1e-15)
    assert g(1100.0, TRUTH) == 0.0  # outside the 2.1 MHz feature


def test_n2_is_lorentzian_dip():
    p = HoleProfile(200.0, 2.0, 1.0)
    x = np.linspace(-500, 500, 101)
    np.testing.assert_allclose(1.0 - g(x, p), 1.0 / (1.0 + (x / 100.0) ** 2), rtol=1e-13)


@given(st.floats(-1050.0, 1050.0))
def test_g_even_and_bounded(x):
    v = g(x, TRUTH)
    assert 0.0 <= v <= 1.0
    assert v == g(-x, TRUTH)


@settings(max_examples=50)
@given(st.floats(0.0, 1000.0), st.floats(0.0, 50.0))
def test_g_monotone_in_abs_detuning(x, dx):
    assert g(x + dx, TRUTH) >= g(x, TRUTH) - 1e-15


@given(st.floats(1.0, 5.0), st.floats(0.0, 1.0), st.floats(1.0, 4.0))
def test_higher_n_more_squarish(n1, dn, s):
    lo, hi = HoleProfile(230.0, n1, 1.0), HoleProfile(230.0, n1 + dn, 1.0)
    inner = 0.5 * 230.0 * 0.5 * s / 4.0  # |2D/delta0| < 1
    outer = 0.5 * 230.0 * (1.0 + s / 4.0)  # |2D/delta0| > 1
    assert g(inner, hi) <= g(inner, lo) + 1e-15
    assert g(outer, hi) >= g(outer, lo) - 1e-15


def test_profile_validation():
    for bad in (dict(delta0_khz=0), dict(n=0.5), dict(od=-1), dict(feature_width_mhz=0.1)):
        with pytest.raises(ValueError):
            HoleProfile(**bad)


def test_extrapolate_od():
    assert extrapolate_od(3.3, 1.0) == 3.3
    assert extrapolate_od(1.0, 2.5) == 2.5
    assert extrapolate_od(extrapolate_od(3.7, 2.9), 1 / 2.9) == pytest.approx(3.7, rel=1e-12)
    with pytest.raises(ValueError):
        extrapolate_od(1.0, 0.0)


def test_noiseless_fit_recovers_truth():
    init = HoleProfile(180.0, 2.2, 7.0)
    prof, rep = fit_hole(AbsorptionTrace.synthetic(TRUTH, DET), init)
    assert prof.delta0_khz == pytest.approx(230.0, rel=1e-6)
    assert prof.n == pytest.approx(3.0, rel=1e-6)
    assert prof.od == pytest.approx(8.7, rel=1e-6)
    assert rep.residual_norm < 1e-8
    assert rep.covariance.shape == (3, 3)


def test_fit_from_truth_converges_immediately():
    _, rep = fit_hole(AbsorptionTrace.synthetic(TRUTH, DET), TRUTH)
    assert rep.iterations <= 2


def test_noisy_fit_delta0_within_5_percent():
    rng = np.random.default_rng(123)
    errs = []
    for _ in range(100):
        trace = AbsorptionTrace.synthetic(TRUTH, DET, 0.05 * 8.7, rng)
        prof, _ = fit_hole(trace, HoleProfile(200.0, 2.5, 8.0))
        errs.append(abs(prof.delta0_khz / 230.0 - 1.0))
    assert max(errs) < 0.05


def test_fit_rejects_degenerate_and_narrow_traces():
    flat = AbsorptionTrace(DET, np.full(DET.size, 8.7))
    with pytest.raises(DegenerateDataError):
        fit_hole(flat, TRUTH)
    narrow = AbsorptionTrace.synthetic(TRUTH, np.linspace(-300, 300, 61))
    with pytest.raises(ValueError):
        fit_hole(narrow, TRUTH)


def test_trace_io_round_trip(tmp_path):
    trace = AbsorptionTrace.synthetic(TRUTH, DET)
    path = tmp_path / "t.csv"
    write_trace(path, trace)
    back = read_trace(path)
    np.testing.assert_array_equal(back.detunings_khz, trace.detunings_khz)
    np.testing.assert_array_equal(back.optical_depths, trace.optical_depths)


@pytest.mark.parametrize(
    "text,line",
    [
        ("detuning,od\n1,2\n", 1),
        ("detuning_khz,od\n1,2\n2,3\n3,x\n4,5\n", 4),
        ("detuning_khz,od\n1,2\n2\n", 3),
    ],
)
def test_read_trace_reports_line(tmp_path, text, line):
    path = tmp_path / "bad.csv"
    path.write_text(text)
    with pytest.raises(ValueError, match=f"bad.csv:{line}:"):
        read_trace(path)


def test_bundled_trace_fits_to_reference():
    from pathlib import Path

    path = Path(__file__).resolve().parent.parent / "data" / "hole_trace.csv"
    prof, _ = fit_hole(read_trace(path), HoleProfile(200.0, 2.5, 8.0))
    assert (prof.delta0_khz, prof.n, prof.od) == pytest.approx((230.0, 3.0, 8.7), rel=1e-6)
