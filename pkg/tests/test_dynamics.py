import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fewbody_otto.dynamics import (
    POLYNOMIAL,
    SCALE_INVARIANT,
    AccuracyError,
    GridSpec,
    RampProtocol,
    finite_time_cycle,
    grid_eigenstates,
    grid_energy,
    propagate,
    ramp_value,
    sudden_energy,
    tau_sweep,
)
from fewbody_otto.spectrum2p import even_shifts
from fewbody_otto.thermo import CycleConfig, run_cycle

SMALL = GridSpec(10.0, 1025, 2e-3)
CFG = CycleConfig.from_kappa(1 / 3, g_tilde_i=1.95, g_tilde_f=1.4, beta_c=10.0, beta_h=1.0, statistics="d")


@given(st.floats(min_value=0.5, max_value=5), st.floats(min_value=0.5, max_value=5),
       st.floats(min_value=0.01, max_value=100))
def test_ramp_endpoints_and_flat_ends(f0, f1, tau):
    p = RampProtocol(f0, f1, tau)
    assert ramp_value(p, 0.0) == pytest.approx(f0)
    assert ramp_value(p, tau) == pytest.approx(f1)
    # zero first derivative at both ends
    h = 1e-6 * tau
    assert abs(ramp_value(p, h) - f0) < 1e-9 * max(1, abs(f1 - f0))
    assert abs(ramp_value(p, tau - h) - f1) < 1e-9 * max(1, abs(f1 - f0))


def test_scale_invariant_ramp_tracks_frequency():
    w = RampProtocol(1.0, 3.0, 2.0)
    g = RampProtocol(2.0, 0.0, 2.0, SCALE_INVARIANT)
    t = np.linspace(0, 2, 9)
    assert np.allclose(ramp_value(g, t, w), 2.0 * np.sqrt(ramp_value(w, t)))
    with pytest.raises(ValueError):
        ramp_value(g, 1.0)
    with pytest.raises(ValueError):
        ramp_value(RampProtocol(1, 2, 1.0, POLYNOMIAL), 1.5)


def test_grid_spectrum_oscillator_and_contact():
    g = GridSpec(12.0, 4097, 1e-3)
    e, v = grid_eigenstates(g, 1.0, 0.0, 6)
    assert np.allclose(e, np.arange(6) + 0.5, atol=2e-5)
    # relative ground state with contact c = g_tilde (omega = 1)
    e, v = grid_eigenstates(g, 1.0, 1.6, 1)
    assert e[0] == pytest.approx(0.5 + even_shifts(0, 1.6)[0], abs=2e-6)
    assert grid_energy(g, v, 1.0, 1.6)[0] == pytest.approx(e[0], abs=1e-10)


def test_sudden_quench_oracle():
    e, v = grid_eigenstates(SMALL, 1.0, 0.0, 3)
    w = RampProtocol(1.0, 3.0, 1e-3)
    out = propagate(SMALL, v, lambda t: ramp_value(w, t), lambda t: 0 * t, 1e-3, 3.0, 0.0)
    assert np.allclose(out.energies, [sudden_energy(1, 3, n) for n in range(3)], rtol=2e-3)
    assert out.norm_drift < 1e-10


def test_slow_ramp_is_adiabatic():
    e, v = grid_eigenstates(SMALL, 1.0, 1.0, 2)
    w = RampProtocol(1.0, 2.0, 30.0)
    out = propagate(SMALL, v, lambda t: ramp_value(w, t), lambda t: 0 * t + 1.0, 30.0, 2.0, 1.0)
    e_end, _ = grid_eigenstates(SMALL, 2.0, 1.0, 2)
    assert np.allclose(out.energies, e_end, atol=1e-3)


def test_odd_states_blind_to_contact():
    e, v = grid_eigenstates(SMALL, 1.0, 0.0, 4)
    odd = v[:, [1, 3]]
    w = RampProtocol(1.0, 3.0, 2.0)
    a = propagate(SMALL, odd, lambda t: ramp_value(w, t), lambda t: 0 * t, 2.0, 3.0, 0.0)
    b = propagate(SMALL, odd, lambda t: ramp_value(w, t), lambda t: 0 * t + 5.0, 2.0, 3.0, 0.0)
    assert np.allclose(a.energies, b.energies, atol=1e-10)


def test_leakage_raises_accuracy_error():
    tiny = GridSpec(3.0, 257, 2e-3)
    e, v = grid_eigenstates(tiny, 1.0, 0.0, 8)
    w = RampProtocol(1.0, 0.9, 0.5)
    with pytest.raises(AccuracyError):
        propagate(tiny, v[:, 6:], lambda t: ramp_value(w, t), lambda t: 0 * t, 0.5, 0.9, 0.0)


def test_cycle_adiabatic_limit_matches_thermo():
    r = finite_time_cycle(CFG, 25.0, "optimal", SMALL)
    assert r.W_tau == pytest.approx(run_cycle(CFG).W, abs=2e-3)
    assert r.W_irr == pytest.approx(0.0, abs=1e-4)
    assert abs(r.W_tau + r.Q_h + (r.stroke_energies["E1"] - r.stroke_energies["E4"])) < 1e-12


def test_sweep_shapes_and_order():
    rows = tau_sweep(CFG, [0.5, 2.0], grid=SMALL)
    assert [r.protocol for r in rows] == ["optimal", "scale_invariant", "noninteracting"] * 2
    assert all(r.W_irr > -1e-6 for r in rows)
    with pytest.raises(ValueError):
        tau_sweep(CFG, [2.0, 1.0], grid=SMALL)
    with pytest.raises(ValueError):
        finite_time_cycle(CFG, 1.0, "bogus", SMALL)


def test_gridspec_validation():
    with pytest.raises(ValueError):
        GridSpec(12.0, 4096)
    assert GridSpec().refined().points == 8193
