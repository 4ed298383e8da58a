import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fewbody_otto.spectrum2p import (
    TrapInteraction,
    epsilon_to_gtilde,
    even_shifts,
    odd_level,
    relative_shifts,
    solve_even_level,
    transcendental_residual,
    two_body_spectrum,
)


def mp_residual(E, g):
    E = mpmath.mpf(E)
    return g + 2 * mpmath.gamma(-E / 2 + mpmath.mpf(3) / 4) / mpmath.gamma(-E / 2 + mpmath.mpf(1) / 4)


@pytest.mark.parametrize("g", [0.1, 0.8, 1.6, 3.0, 50.0])
def test_roots_satisfy_condition_in_mpmath(g):
    eps = even_shifts(5, g)
    for k, e in enumerate(eps):
        E = 2 * k + 0.5 + e
        # relative residual, scaled by the coupling
        assert abs(float(mp_residual(E, g))) < 1e-9 * max(1.0, g)


def test_noninteracting_and_fermionized_limits():
    assert np.all(even_shifts(6, 0.0) == 0.0)
    assert np.allclose(even_shifts(6, 1e8), 1.0, atol=1e-6)
    assert np.all(even_shifts(3, np.inf) == 1.0)


@settings(max_examples=50, deadline=None)
@given(st.floats(min_value=1e-3, max_value=1e4), st.floats(min_value=1.01, max_value=3.0))
def test_shift_monotone_in_coupling(g, factor):
    a, b = even_shifts(4, g), even_shifts(4, g * factor)
    assert np.all(b >= a - 1e-13)
    assert np.all((a > 0) & (a < 1))


@settings(max_examples=50, deadline=None)
@given(st.floats(min_value=0.01, max_value=0.98), st.integers(min_value=0, max_value=6))
def test_inverse_round_trip(eps, nu):
    g = float(epsilon_to_gtilde(eps, nu))
    assert solve_even_level(nu, g).epsilon == pytest.approx(eps, abs=1e-10)


def test_weak_coupling_slope_matches_first_order():
    # first-order shift of the relative ground state: g_tilde / sqrt(pi) ... in units where
    # psi_0(0)^2 = 1/sqrt(pi) and the relative coupling is g_tilde
    g = 1e-5
    assert even_shifts(0, g)[0] == pytest.approx(g / np.sqrt(np.pi), rel=1e-4)


def test_odd_levels_and_layout():
    assert odd_level(0).energy == 1.5
    eps = relative_shifts(7, 1.6)
    assert np.all(eps[1::2] == 0.0) and np.all(eps[0::2] > 0)
    assert transcendental_residual(0.5 + eps[0], 1.6) == pytest.approx(0.0, abs=1e-10)


def test_two_body_spectrum_bosons_keep_even_states():
    s = two_body_spectrum(TrapInteraction.from_g_tilde(1.0, 1.6), "bosonic", 4, 6)
    assert set(s.labels[:, 1] % 2) == {0}
    d = two_body_spectrum(TrapInteraction.from_g_tilde(2.0, 1.6), "distinguishable", 4, 6)
    assert d.energies[0] == pytest.approx(2.0 * (1.0 + even_shifts(0, 1.6)[0]))


def test_g_tilde_scaling():
    ti = TrapInteraction.from_g_tilde(3.0, 1.4)
    assert ti.g_tilde == pytest.approx(1.4)
    assert ti.g == pytest.approx(1.4 * np.sqrt(6.0))
    with pytest.raises(ValueError):
        TrapInteraction(1.0, -1.0)


def test_extreme_couplings_round_onto_the_ends():
    lo, hi = even_shifts(4, 5e-324), even_shifts(4, 1e300)
    assert np.all(lo >= 0) and np.all(lo < 1e-300)
    assert np.all(hi <= 1) and np.all(hi > 1 - 1e-12)
