from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fewbody_otto.spectrum import TruncationError, noninteracting_spectrum
from fewbody_otto.thermo import (
    CycleConfig,
    carnot,
    curzon_ahlborn,
    endpoint_spectra,
    heatmap,
    noninteracting_work_vs_N,
    run_cycle,
    run_cycle_two_body,
    thermal_state,
)

BASE = CycleConfig.from_kappa(1 / 3, beta_c=10.0, beta_h=1.0)


@pytest.mark.parametrize("N,stat", [(1, "d"), (2, "b"), (2, "d"), (3, "b"), (3, "d"), (4, "b")])
def test_otto_efficiency_without_interaction(N, stat):
    r = run_cycle(replace(BASE, N=N, statistics=stat))
    assert r.eta == pytest.approx(2 / 3, abs=1e-12)
    assert r.W_over_otto == pytest.approx(1.0, abs=1e-9)


@settings(max_examples=25, deadline=None)
@given(st.floats(min_value=0, max_value=50), st.sampled_from(["b", "d"]),
       st.floats(min_value=0.15, max_value=0.9))
def test_scale_invariant_diagonal(g, stat, kappa):
    # kappa > beta_h / beta_c = 0.1 keeps the cycle an engine
    cfg = CycleConfig.from_kappa(kappa, g_tilde_i=g, g_tilde_f=g, statistics=stat)
    r = run_cycle(cfg)
    assert r.eta == pytest.approx(1 - kappa, abs=1e-9)
    assert r.first_law_residual < 1e-10


@settings(max_examples=25, deadline=None)
@given(st.floats(min_value=0, max_value=20), st.floats(min_value=0, max_value=20), st.sampled_from(["b", "d"]))
def test_first_law_and_factorization(gi, gf, stat):
    cfg = replace(BASE, g_tilde_i=gi, g_tilde_f=gf, statistics=stat)
    fast = run_cycle_two_body(cfg)
    full = run_cycle(cfg, endpoint_spectra(cfg))
    assert fast.first_law_residual < 1e-10 and full.first_law_residual < 1e-10
    assert fast.W == pytest.approx(full.W, abs=1e-9)
    assert fast.Q_h == pytest.approx(full.Q_h, abs=1e-9)


def test_thermal_state_truncation_guard():
    s = noninteracting_spectrum(2, "d", 1.0, 5)
    with pytest.raises(TruncationError) as exc:
        thermal_state(s, 0.1)
    assert exc.value.required_quanta > 5


def test_dissipator_flagged():
    r = run_cycle(replace(BASE, g_tilde_i=0.0, g_tilde_f=50.0, statistics="d"))
    assert r.W > 0 and r.mode == "dissipator" and np.isnan(r.eta)


def test_work_linear_in_N_for_distinguishable():
    w = noninteracting_work_vs_N([1, 2, 3, 4], replace(BASE, statistics="d"))
    assert np.allclose(np.array(w) / w[0], [1, 2, 3, 4], rtol=1e-9)


def test_reference_efficiencies():
    assert curzon_ahlborn(0.25, 1.0) == pytest.approx(0.5)
    assert carnot(0.25, 1.0) == pytest.approx(0.75)
    with pytest.raises(ValueError):
        curzon_ahlborn(2.0, 1.0)


def test_config_validation():
    with pytest.raises(ValueError):
        CycleConfig(omega_i=2.0, omega_f=1.0)
    with pytest.raises(ValueError):
        CycleConfig(beta_c=1.0, beta_h=2.0)
    with pytest.raises(ValueError):
        CycleConfig(g_tilde_i=-1.0)


def test_small_heatmap_corners():
    res = heatmap(replace(BASE, statistics="b"), n=5, polish=False)
    assert res.eta_over_otto[0, 0] == pytest.approx(1.0, abs=1e-9)
    assert res.W_over_otto[0, 0] == pytest.approx(1.0, abs=1e-9)
    assert res.first_law_max < 1e-10
    assert np.all(res.W_over_otto >= 1 - 1e-6)


def test_first_law_on_the_engine_edge():
    # kappa = beta_h / beta_c on the diagonal: heats vanish while stroke work stays finite
    cfg = CycleConfig.from_kappa(0.9, beta_c=1.0, beta_h=0.9, statistics="b", g_tilde_i=50.0, g_tilde_f=50.0)
    r = run_cycle_two_body(cfg)
    assert abs(r.Q_h) < 1e-12 < abs(r.W_c)
    assert r.first_law_residual < 1e-10
