import math

import numpy as np
import pytest

from holememory.core import (
    ComplexEnvelope,
    DetuningGrid,
    GridError,
    TimeGrid,
    khz_to_angular,
    make_gaussian_pulse,
    pulse_energy,
)
from holememory.hole_profile import HoleProfile, g
from holememory.propagation import (
    OracleRangeError,
    PropagationDivergence,
    PropagationGrids,
    Propagator,
    compare_oracle,
    linear_transfer_oracle,
    oracle_group_delay,
    oracle_output,
    peak_time,
    propagate,
    write_snapshots,
)

REFERENCE = HoleProfile(230.0, 3.0, 8.7)
COARSE = PropagationGrids(25, DetuningGrid.uniform(3.0, 300))


def gaussian_input(t_end=30.0, dt=0.01, peak=1.0):
    return make_gaussian_pulse(3.0, 7.5, peak, TimeGrid(0.0, t_end, dt))


def cw_transmission(f_khz, t_end=55.0, ramp=20.0, settle=40.0):
    """Steady-state |E_out/E_in|^2 for a weak probe detuned by f_khz."""
    grid = TimeGrid(0.0, t_end, 0.01)
    t = grid.times
    env = np.sin(0.5 * np.pi * np.clip(t / ramp, 0.0, 1.0)) ** 2
    inp = ComplexEnvelope(grid, 1e-3 * env * np.exp(-1j * khz_to_angular(f_khz) * t))
    out = propagate(inp, None, REFERENCE).output
    sel = t > settle
    return float(np.mean(np.abs(out.samples[sel] / inp.samples[sel]) ** 2))


def test_transparent_medium_is_identity():
    inp = gaussian_input()
    out = propagate(inp, None, REFERENCE.with_od(0.0)).output
    np.testing.assert_allclose(out.samples, inp.samples, rtol=1e-10, atol=1e-14)


@pytest.mark.parametrize("f_khz", [51.25, 201.25])
def test_cw_beer_lambert(f_khz):
    expected = math.exp(-REFERENCE.od * g(f_khz, REFERENCE))
    assert cw_transmission(f_khz) == pytest.approx(expected, rel=0.01)


def test_oracle_plateau_and_hole_centre():
    sharp = HoleProfile(230.0, 8.0, 8.7)
    w = khz_to_angular(np.array([0.0, 900.0]))
    h = linear_transfer_oracle(sharp, w)
    assert abs(h[0]) ** 2 == pytest.approx(1.0, abs=1e-9)
    assert abs(h[1]) ** 2 == pytest.approx(math.exp(-8.7), rel=1e-6)
    # modulus is exactly Beer-Lambert for any profile
    f = np.array([37.0, 115.0, 600.0])
    np.testing.assert_allclose(
        np.abs(linear_transfer_oracle(REFERENCE, khz_to_angular(f))) ** 2,
        np.exp(-REFERENCE.od * g(f, REFERENCE)),
        rtol=1e-12,
    )


def test_oracle_group_delay_matches_peak_delay():
    inp = gaussian_input()
    out = propagate(inp, None, REFERENCE, COARSE).output
    delay = peak_time(out) - peak_time(inp)
    assert oracle_group_delay(REFERENCE) == pytest.approx(delay, rel=0.10)


def test_oracle_band_must_hold_spectrum():
    with pytest.raises(OracleRangeError):
        oracle_output(gaussian_input(), REFERENCE, band_khz=50.0)


def test_compare_oracle_transparent():
    rep = compare_oracle(gaussian_input(), REFERENCE.with_od(0.0))
    assert rep.relative_rms <= 1e-10


def test_compare_oracle_converges_under_refinement():
    inp = gaussian_input()
    ref = oracle_output(inp, REFERENCE)
    levels = [(25, 300), (50, 600), (100, 1200)]
    errs = [
        compare_oracle(inp, REFERENCE, PropagationGrids(nz, DetuningGrid.uniform(3.0, nd)), oracle=ref).relative_rms
        for nz, nd in levels
    ]
    assert errs[-1] < 1e-2
    assert errs[0] > errs[1] > errs[2]


def test_passivity_and_linearity():
    inp = gaussian_input()
    a = propagate(inp, None, REFERENCE, COARSE).output
    b = propagate(inp.scaled(3.7), None, REFERENCE, COARSE).output
    assert pulse_energy(a) <= pulse_energy(inp)
    np.testing.assert_allclose(b.samples, 3.7 * a.samples, rtol=1e-12, atol=1e-15)


def test_causality_up_to_interpolation_stencil():
    inp = gaussian_input()
    k = 900  # t = 9 us
    cut = inp.samples.copy()
    cut[k + 1 :] = 0.0
    a = propagate(inp, None, REFERENCE, COARSE).output.samples
    b = propagate(ComplexEnvelope(inp.grid, cut), None, REFERENCE, COARSE).output.samples
    # the cubic drive midpoint reaches one sample ahead
    np.testing.assert_array_equal(a[:k], b[:k])
    assert np.any(a[k + 2 :] != b[k + 2 :])


def test_full_mode_weak_input_matches_perturbative():
    inp = gaussian_input(peak=1e-3)
    pert = propagate(inp, None, REFERENCE, COARSE, mode="perturbative").output.samples
    full = propagate(inp, None, REFERENCE, COARSE, mode="full").output.samples
    assert np.linalg.norm(full - pert) / np.linalg.norm(pert) < 1e-5


def test_resolution_rule_enforced():
    grid = TimeGrid(0.0, 30.0, 0.05)
    inp = make_gaussian_pulse(3.0, 7.5, 1.0, grid)
    with pytest.raises(GridError):
        propagate(inp, None, REFERENCE)


def test_divergence_reports_last_stable_index():
    prop = Propagator(gaussian_input(), None, REFERENCE, COARSE)
    prop.advance(100)
    prop.state.ce[3, 5] = np.nan
    with pytest.raises(PropagationDivergence) as err:
        prop.advance()
    assert err.value.last_stable_index == 100


def test_checkpoint_restore_reproduces_run():
    prop = Propagator(gaussian_input(), None, REFERENCE, COARSE)
    prop.advance(500)
    ck = prop.checkpoint()
    prop.advance()
    first = prop.output.copy()
    prop.restore(ck)
    prop.advance()
    np.testing.assert_array_equal(first, prop.output)


def test_energy_bookkeeping_without_raman():
    inp = gaussian_input(t_end=16.0)
    res = propagate(inp, None, REFERENCE, COARSE)
    ens = res.final_ensemble
    total = pulse_energy(res.output) + ens.optical_energy + ens.spin_energy
    assert total == pytest.approx(pulse_energy(inp), rel=0.02)


def test_grid_refinement_changes_energy_little():
    inp = gaussian_input()
    coarse = propagate(inp, None, REFERENCE, PropagationGrids(50)).output
    fine_inp = gaussian_input(dt=0.005)
    fine = propagate(fine_inp, None, REFERENCE, PropagationGrids(100)).output
    assert pulse_energy(fine) == pytest.approx(pulse_energy(coarse), rel=0.005)


def test_snapshots_csv(tmp_path):
    inp = make_gaussian_pulse(1.0, 3.0, 1.0, TimeGrid(0.0, 6.0, 0.01))
    res = propagate(inp, None, REFERENCE, PropagationGrids(4, DetuningGrid.uniform(3.0, 60)), snapshots=True)
    assert res.snapshots.shape == (inp.grid.count, 5)
    np.testing.assert_allclose(res.snapshots[:, 0], inp.samples)
    np.testing.assert_allclose(res.snapshots[:, -1], res.output.samples)
    path = tmp_path / "snap.csv"
    write_snapshots(path, res)
    lines = path.read_text().splitlines()
    assert lines[0] == "t_us,z_norm,re_e,im_e"
    assert len(lines) == 1 + inp.grid.count * 5
