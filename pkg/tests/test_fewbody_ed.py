import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from fewbody_otto.fewbody_ed import (
    BasisSpec,
    ResourceError,
    build_hamiltonian,
    delta_matrix_element,
    diagonalize,
    exact_pair_states,
    ground_shift_3p,
    gtilde_for_epsilon_3p,
    hermite_functions,
    product_states,
    relative_sector_energies,
    three_body_levels,
)
from fewbody_otto.spectrum import ladder_degeneracy
from fewbody_otto.spectrum2p import even_shifts


@settings(max_examples=30, deadline=None)
@given(st.tuples(*[st.integers(min_value=0, max_value=9)] * 4))
def test_delta_element_against_quadrature(idx):
    a, b, c, d = idx

    def f(x):
        p = hermite_functions(9, x)
        return p[a] * p[b] * p[c] * p[d]

    ref = quad(f, -12, 12, limit=400, epsabs=1e-13)[0]
    assert delta_matrix_element(a, b, c, d) == pytest.approx(ref, abs=1e-11)


def test_delta_ground_element():
    assert delta_matrix_element(0, 0, 0, 0) == pytest.approx(1 / np.sqrt(2 * np.pi), rel=1e-14)


def test_hermite_functions_orthonormal():
    x, w = np.polynomial.hermite.hermgauss(60)
    phi = hermite_functions(20, x) * np.exp(0.5 * x * x)
    gram = (phi * w) @ phi.T
    assert np.allclose(gram, np.eye(21), atol=1e-12)


@pytest.mark.parametrize("N,stat", [(2, "b"), (2, "d"), (3, "b"), (3, "d")])
def test_product_basis_noninteracting_ladder(N, stat):
    spec = BasisSpec(N, 8, stat)
    e = np.linalg.eigvalsh(build_hamiltonian(spec, 0.0))
    counts = [int(np.sum(np.isclose(e, k + N / 2))) for k in range(9)]
    assert counts == [ladder_degeneracy(k, N, stat) for k in range(9)]
    assert len(product_states(N, 8, stat)) == spec.dimension


def test_product_basis_is_variational_and_approaches_analytic():
    exact = 1.0 + even_shifts(0, 1.6)[0]
    e20 = diagonalize(BasisSpec(2, 20, "d"), 1.6, check=False).energies[0]
    e40 = diagonalize(BasisSpec(2, 40, "d"), 1.6, check=False).energies[0]
    assert exact < e40 < e20
    # contact term in an oscillator basis: error ~ e_cut**-1/2
    assert 1.2 < (e20 - exact) / (e40 - exact) < 1.6


def test_resource_cap():
    with pytest.raises(ResourceError):
        build_hamiltonian(BasisSpec(3, 60, "d"), 1.0)


@pytest.mark.parametrize("stat", ["b", "d"])
def test_jacobi_bare_equals_product_basis(stat):
    # the product space with total quanta <= K is the sum over n_cm of relative shells <= K - n_cm
    g, K = 1.3, 10
    prod = diagonalize(BasisSpec(3, K, stat), g, check=False).energies
    deg = {"b": (1, 1, 0, 0, 0, 0), "d": (1, 1, 2, 2, 1, 1)}[stat]
    union = []
    for n in range(K + 1):
        rel = relative_sector_energies(K - n, g, "bare", sectors=tuple(s for s in range(6) if deg[s]))
        for s, (e, _) in rel.items():
            union.extend(np.repeat(n + 0.5 + e, deg[s]))
    assert len(prod) == len(union)
    assert np.allclose(prod, np.sort(union), atol=1e-11)


def test_effective_pair_states_reproduce_two_body_levels():
    C, E = exact_pair_states(2.0, 30)
    assert np.allclose(E[:5] - 0.5 - 2 * np.arange(5), even_shifts(4, 2.0), atol=1e-12)


def test_three_body_limits():
    assert ground_shift_3p(0.0) == pytest.approx(0.0, abs=1e-12)
    # fermionized three-boson ground state: 3/2 + 3
    assert ground_shift_3p(np.inf) == pytest.approx(3.0, abs=1e-3)
    a, b = ground_shift_3p(1.0), ground_shift_3p(5.0)
    assert 0 < a < b < 3


def test_three_body_weak_coupling_first_order():
    # first order: 3 pairs * sqrt(2) g * <00|delta|00>, with <00|delta|00> = 1/sqrt(2 pi)
    g = 1e-4
    assert ground_shift_3p(g) == pytest.approx(3 * g / np.sqrt(2 * np.pi) * np.sqrt(2), rel=1e-3)


def test_epsilon_inverse():
    g = gtilde_for_epsilon_3p(1.5)
    assert ground_shift_3p(g) == pytest.approx(1.5, abs=1e-9)
    with pytest.raises(ValueError):
        gtilde_for_epsilon_3p(3.2)


def test_three_body_levels_labels_stable_and_converged():
    a = three_body_levels(0.0, "d", 6).spectrum(1.0)
    b = three_body_levels(8.0, "d", 6).spectrum(1.0)
    perm = b.aligned_to(a)
    # repulsion lifts every level by less than 3 quanta
    d = b.energies[perm] - a.energies
    assert np.all(d >= -1e-9) and np.all(d < 3.0 + 1e-3)
    assert three_body_levels(8.0, "d", 6).max_change() < 1e-4


def test_fermionic_sectors_blind_to_contact():
    a = relative_sector_energies(20, 0.0, sectors=(4, 5))
    b = relative_sector_energies(20, 30.0, sectors=(4, 5))
    for s in (4, 5):
        assert np.array_equal(a[s][0], b[s][0])


def test_cache_round_trip(tmp_path):
    spec = BasisSpec(2, 10, "b")
    first = diagonalize(spec, 0.7, cache_dir=tmp_path)
    assert list(tmp_path.glob("ed_*.npz"))
    second = diagonalize(spec, 0.7, cache_dir=tmp_path)
    assert np.array_equal(first.energies, second.energies)


def test_basis_validation():
    with pytest.raises(ValueError):
        BasisSpec(4, 10)
    with pytest.raises(ValueError):
        BasisSpec(2, 10, method="jacobi")
    with pytest.raises(ValueError):
        BasisSpec(3, 10, coupling="running")
