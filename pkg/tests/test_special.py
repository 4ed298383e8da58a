import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fewbody_otto.special import GammaPoleError, gamma_fn, gamma_ratio, log_abs_gamma, rgamma, sinpi


@given(st.floats(min_value=0.05, max_value=150.0))
def test_gamma_matches_math_on_positive_axis(x):
    assert gamma_fn(x) == pytest.approx(math.gamma(x), rel=1e-13)


@given(st.floats(min_value=-60.0, max_value=-0.01).filter(lambda x: abs(x - round(x)) > 1e-6))
def test_gamma_negative_axis_against_mpmath(x):
    assert gamma_fn(x) == pytest.approx(float(mpmath.gamma(x)), rel=1e-11)


@pytest.mark.parametrize("n", [0, -1, -2, -7])
def test_poles(n):
    with pytest.raises(GammaPoleError):
        gamma_fn(float(n))
    assert rgamma(float(n)) == 0.0
    assert log_abs_gamma(float(n))[1] == 0


@settings(max_examples=200)
@given(st.floats(min_value=-40, max_value=40), st.floats(min_value=-40, max_value=40))
def test_gamma_ratio_against_mpmath(a, b):
    if abs(a - round(a)) < 1e-6 and round(a) <= 0:
        return
    ref = mpmath.rgamma(b) * mpmath.gamma(a)
    assert gamma_ratio(a, b) == pytest.approx(float(ref), rel=1e-10, abs=1e-300)


def test_sinpi_exact_at_integers():
    assert np.all(sinpi(np.arange(-5, 6, dtype=float)) == 0.0)


def test_log_abs_gamma_sign():
    val, sign = log_abs_gamma(-1.5)
    assert sign == 1 and val == pytest.approx(math.log(abs(math.gamma(-1.5))))
    val, sign = log_abs_gamma(-0.5)
    assert sign == -1
