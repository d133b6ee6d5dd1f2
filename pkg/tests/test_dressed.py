import math
from fractions import Fraction

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from collcpt.bare import jump_operators
from collcpt.basis import enumerate_states
from collcpt.darkstate import dressed_to_bare
from collcpt.dressed import (
    DressedRates,
    dressed_steady_state,
    dressed_upper_population,
    dressed_vectors,
    pauli_generator,
    pauli_steady_state,
    rates,
    single_atom_hamiltonian,
    steady_upper_population,
)
from collcpt.params import InvalidParameterError, NumericalError, SystemParams, UnsupportedRegimeError

positive = st.floats(0.05, 20)
occupation = st.floats(0, 20)


def secular_oracle(params):
    """Population rates from bare jump operators rotated into the dressed basis.

    Every dressed transition has a distinct Bohr frequency, so the secular
    rate from state i to j is ``sum_k kappa_k |<j|U^+ A_k U|i>|^2``.
    """
    basis = enumerate_states(params.n_atoms)
    u = dressed_to_bare(params, basis)
    w = np.zeros((basis.dim, basis.dim))
    for kappa, a in jump_operators(params, basis):
        w += kappa * np.abs(u.T @ a @ u) ** 2
    np.fill_diagonal(w, 0.0)
    w[np.diag_indices_from(w)] = -w.sum(axis=0)
    return w


def test_dressed_vectors_symmetric_drive():
    psi1, psi2, psi3 = dressed_vectors(SystemParams(1.0, 1.0))
    s = 1 / math.sqrt(2)
    np.testing.assert_allclose(psi1, [0, -s, s], atol=1e-15)
    np.testing.assert_allclose(psi2, [s, 0.5, 0.5], atol=1e-15)
    np.testing.assert_allclose(psi3, [s, -0.5, -0.5], atol=1e-15)


@settings(max_examples=50, deadline=None)
@given(o2=positive, o3=positive)
def test_dressed_vectors_diagonalize_coupling(o2, o3):
    p = SystemParams(o2, o3)
    u = np.column_stack(dressed_vectors(p))
    np.testing.assert_allclose(u.T @ u, np.eye(3), atol=1e-13)
    h = u.T @ single_atom_hamiltonian(p) @ u
    np.testing.assert_allclose(h, np.diag([0, p.omega, -p.omega]), atol=1e-12 * p.omega)


def test_rates_symmetric_example():
    r = rates(SystemParams.symmetric(1.0, 1.0, 1.0))
    assert (r.gamma0, r.gamma1, r.gamma2) == pytest.approx((0.75, 1.0, 0.5), abs=1e-15)


def test_rates_require_drive():
    with pytest.raises(InvalidParameterError):
        rates(SystemParams(0.0, 0.0))


@settings(max_examples=100, deadline=None)
@given(o2=positive, o3=positive, g=positive, nbar=occupation)
def test_rate_identities(o2, o3, g, nbar):
    r = rates(SystemParams(o2, o3, gamma2=g, gamma3=g, nbar2=nbar, nbar3=nbar))
    assert r.gamma2 == pytest.approx(nbar * g / 2, rel=1e-12, abs=1e-300)
    assert r.gamma2 < r.gamma1
    assert r.gamma1 - r.gamma2 == pytest.approx(g / 2, rel=1e-9)


def test_generator_single_atom_example():
    w = pauli_generator(DressedRates(0.75, 1.0, 0.5), enumerate_states(1))
    expected = np.array([
        [-2.0, 2.0, 2.0],
        [1.0, -3.5, 1.5],
        [1.0, 1.5, -3.5],
    ])
    np.testing.assert_allclose(w, expected)


def test_generator_two_atom_occupancy_factors():
    basis = enumerate_states(2)
    w = pauli_generator(DressedRates(0.0, 0.0, 1.0), basis)
    # (2,0,0) -> (1,1,0) at 2 * (0+1) * 2
    assert w[basis.index[(1, 1, 0)], basis.index[(2, 0, 0)]] == 4.0
    # (1,1,0) -> (0,2,0) at 2 * (1+1) * 1
    assert w[basis.index[(0, 2, 0)], basis.index[(1, 1, 0)]] == 4.0


@pytest.mark.parametrize("n", [1, 2, 5, 12])
def test_generator_columns_sum_to_zero(n):
    w = pauli_generator(SystemParams(1.3, 0.4, gamma3=2.0, nbar2=0.3, nbar3=1.7, n_atoms=n))
    assert np.max(np.abs(w.sum(axis=0))) < 1e-12
    assert np.all(w - np.diag(np.diag(w)) >= 0)


def test_generator_rejects_detuning():
    with pytest.raises(UnsupportedRegimeError, match="two-photon resonance"):
        pauli_generator(SystemParams(1.0, 1.0, delta=0.1))


def test_generator_needs_basis_for_raw_rates():
    with pytest.raises(InvalidParameterError):
        pauli_generator(DressedRates(1, 1, 1))


@pytest.mark.parametrize("params", [
    SystemParams(1.0, 1.0, nbar2=1.0, nbar3=1.0),
    SystemParams(2.0, 0.7, gamma3=1.6, nbar2=0.2, nbar3=2.5, n_atoms=2),
    SystemParams(0.5, 3.0, gamma3=0.4, nbar2=1.2, nbar3=0.1, n_atoms=3),
])
def test_generator_matches_operator_level_secular_rates(params):
    np.testing.assert_allclose(pauli_generator(params), secular_oracle(params), atol=1e-12)


def test_steady_state_examples():
    p, _ = dressed_steady_state(SystemParams.symmetric(1.0, 1.0, 1.0))
    np.testing.assert_allclose(p, [0.5, 0.25, 0.25], atol=1e-15)
    p, basis = dressed_steady_state(SystemParams.symmetric(1.0, 1.0, 1.0, n_atoms=2))
    weights = {(2, 0, 0): 4, (1, 1, 0): 2, (1, 0, 1): 2, (0, 2, 0): 1, (0, 1, 1): 1, (0, 0, 2): 1}
    for state, weight in weights.items():
        assert p[basis.index[state]] == pytest.approx(weight / 11, abs=1e-15)


def random_generator(rng, n):
    w = rng.exponential(size=(n, n)) * (rng.random((n, n)) < 0.7)
    w[0, 1:] += 0.1  # every state reaches state 0
    w[1:, 0] += 0.1
    np.fill_diagonal(w, 0.0)
    w[np.diag_indices(n)] = -w.sum(axis=0)
    return w


@pytest.mark.parametrize("seed", range(10))
def test_gth_matches_null_space(seed):
    rng = np.random.default_rng(seed)
    w = random_generator(rng, int(rng.integers(2, 30)))
    ns = scipy.linalg.null_space(w)
    assert ns.shape[1] == 1
    ref = ns[:, 0] / ns[:, 0].sum()
    np.testing.assert_allclose(pauli_steady_state(w), ref, rtol=1e-10, atol=1e-14)


def test_gth_keeps_tiny_probabilities_accurate():
    # birth-death chain with ratio 1e-3 per step: exact weights are powers of 1e-3
    n = 40
    w = np.zeros((n, n))
    for k in range(n - 1):
        w[k + 1, k] = 1e-3
        w[k, k + 1] = 1.0
    w[np.diag_indices(n)] = -w.sum(axis=0)
    p = pauli_steady_state(w)
    exact = 10.0 ** (-3 * np.arange(n))
    np.testing.assert_allclose(p, exact / exact.sum(), rtol=1e-12)


def test_gth_rejects_reducible_and_non_generators():
    w = np.array([[0.0, 0.0], [0.0, 0.0]])
    with pytest.raises(NumericalError):
        pauli_steady_state(w)
    with pytest.raises(InvalidParameterError):
        pauli_steady_state(np.array([[-1.0, 0.0], [2.0, 0.0]]))


def test_absorbing_dark_state_without_thermal_photons():
    p, basis = dressed_steady_state(SystemParams(1.0, 2.0, n_atoms=4))
    assert p[basis.index[(4, 0, 0)]] == 1.0
    assert dressed_upper_population(p, basis) == 0.0


def test_upper_population_examples():
    assert steady_upper_population(SystemParams.symmetric(1.0, 1.0, 1.0)) == pytest.approx(0.25, abs=1e-15)
    p2 = SystemParams.symmetric(1.0, 1.0, 1.0, n_atoms=2)
    assert steady_upper_population(p2) == pytest.approx(5 / 11, abs=1e-15)
    # exact rational value from the weights 4,2,2,1,1,1 over 11
    num = sum(Fraction(w, 11) * (m2 + m3) for (m1, m2, m3), w in
              {(2, 0, 0): 4, (1, 1, 0): 2, (1, 0, 1): 2, (0, 2, 0): 1, (0, 1, 1): 1, (0, 0, 2): 1}.items())
    assert num / 2 == Fraction(5, 11)
