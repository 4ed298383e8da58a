import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fewbody_otto.spectrum import (
    Spectrum,
    Truncation,
    degeneracy,
    ladder_degeneracy,
    noninteracting_spectrum,
    normalize_statistics,
    quanta_for_tail,
)


@given(st.integers(min_value=0, max_value=12), st.integers(min_value=1, max_value=4),
       st.sampled_from(["bosonic", "distinguishable"]))
def test_closed_form_degeneracy_matches_enumeration(k, n, stat):
    assert ladder_degeneracy(k, n, stat) == degeneracy(k + n / 2, n, stat)


def test_degeneracy_rejects_off_ladder():
    with pytest.raises(ValueError):
        degeneracy(1.7, 2, "b")
    with pytest.raises(ValueError):
        normalize_statistics("fermions")


def test_tail_bound_is_an_upper_bound():
    full = noninteracting_spectrum(3, "distinguishable", 1.0, 200)
    cut = noninteracting_spectrum(3, "distinguishable", 1.0, 10)
    beta = 0.7
    w = full.degeneracy * np.exp(-beta * (full.energies - full.energies[0]))
    missing = w[11:].sum()
    bound = cut.truncation.tail_weight(beta, cut.energies[0])
    assert missing <= bound * (1 + 1e-12)
    assert bound < 1.01 * missing


def test_quanta_for_tail_meets_tolerance():
    k = quanta_for_tail(0.5, 2, 0.0, 1e-9)
    t = Truncation("quanta", 1.0, 2, max_quanta=k)
    assert t.tail_weight(0.5, 1.0) < 1e-9


@given(st.permutations(list(range(6))))
def test_aligned_to_recovers_any_order(perm):
    labels = np.array([[0, 0], [0, 1], [1, 0], [2, 0], [1, 1], [0, 2]])
    e = np.arange(6.0)
    a = Spectrum(e, labels, np.ones(6), 1.0, 2, "d", Truncation("complete", 1.0))
    b = Spectrum(e[::-1] * 2, labels[list(perm)], np.ones(6), 1.0, 2, "d", Truncation("complete", 1.0))
    p = b.aligned_to(a)
    assert np.array_equal(b.labels[p], a.labels)


def test_aligned_to_rejects_mismatch():
    a = Spectrum([0, 1], [[0], [1]], [1, 1], 1.0, 1, "d", Truncation("complete", 1.0))
    b = Spectrum([0, 1], [[0], [2]], [1, 1], 1.0, 1, "d", Truncation("complete", 1.0))
    with pytest.raises(ValueError):
        b.aligned_to(a)
