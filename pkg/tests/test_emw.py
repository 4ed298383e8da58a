import numpy as np
import pytest

from fewbody_otto.emw import EmwBounds, maximize_work
from fewbody_otto.thermo import curzon_ahlborn


def test_noninteracting_emw_is_deterministic_and_near_ca():
    a = maximize_work(1.0, 0.5, 2, "d", EmwBounds.noninteracting(), seed=3, n_starts=3)
    b = maximize_work(1.0, 0.5, 2, "d", EmwBounds.noninteracting(), seed=3, n_starts=3)
    assert a.W_max == b.W_max and a.kappa == b.kappa
    assert a.eta_at_max == pytest.approx(curzon_ahlborn(0.5, 1.0), abs=0.01)
    assert a.g_tilde_i == 0 and a.g_tilde_f == 0
    assert len(a.starts) == 3


def test_interacting_never_worse_than_free():
    free = maximize_work(10.0, 6.0, 2, "d", EmwBounds.noninteracting(), n_starts=3)
    inter = maximize_work(10.0, 6.0, 2, "d", n_starts=3, warm_start=(free.kappa, 0.0, 0.0))
    assert inter.W_max <= free.W_max + 1e-12


def test_validation():
    with pytest.raises(ValueError):
        maximize_work(1.0, 2.0)
    with pytest.raises(ValueError):
        maximize_work(1.0, 0.5, bounds=EmwBounds(kappa=(0.0, 0.5)))
    with pytest.raises(ValueError):
        maximize_work(1.0, 0.5, bounds=EmwBounds(g_tilde_i=(0.0, 80.0)))
