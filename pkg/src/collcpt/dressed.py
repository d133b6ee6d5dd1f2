"""Secular dressed-state dynamics at two-photon resonance.

In the single-atom dressed basis the secular master equation has jump
operators ``R_12, R_13`` (rate ``2*Gamma1``), ``R_21, R_31`` (``2*Gamma2``)
and ``R_23, R_32`` (``2*Gamma0``), all diagonal-preserving on the symmetric
occupation basis. Populations therefore obey a closed classical rate
equation, built here as a generator ``W`` with ``dP/dt = W @ P``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .basis import SymmetricBasis, enumerate_states
from .params import InvalidParameterError, NumericalError, SystemParams, UnsupportedRegimeError


@dataclass(frozen=True)
class DressedRates:
    """Secular transition rates between single-atom dressed states."""
    gamma0: float
    gamma1: float
    gamma2: float


def _require_driven(params: SystemParams) -> float:
    omega = params.omega
    if omega <= 0:
        raise InvalidParameterError("dressed states need a nonzero Rabi frequency")
    return omega


def dressed_vectors(params: SystemParams) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Dressed states ``(psi1, psi2, psi3)`` as amplitudes on bare ``(|1>, |2>, |3>)``.

    ``psi1`` is the dark state with eigenvalue 0; ``psi2``/``psi3`` have
    eigenvalues ``+Omega``/``-Omega`` of the single-atom coupling.
    """
    omega = _require_driven(params)
    c2, c3 = params.omega2 / omega, params.omega3 / omega
    s = 1.0 / math.sqrt(2.0)
    psi1 = np.array([0.0, -c3, c2])
    psi2 = np.array([s, s * c2, s * c3])
    psi3 = np.array([s, -s * c2, -s * c3])
    return psi1, psi2, psi3


def single_atom_hamiltonian(params: SystemParams) -> np.ndarray:
    """3x3 resonant coupling matrix in the bare basis."""
    h = np.zeros((3, 3))
    h[0, 1] = h[1, 0] = params.omega2
    h[0, 2] = h[2, 0] = params.omega3
    return h


def rates(params: SystemParams) -> DressedRates:
    omega = _require_driven(params)
    w2 = (params.omega2 / omega) ** 2
    w3 = (params.omega3 / omega) ** 2
    g2, g3, n2, n3 = params.gamma2, params.gamma3, params.nbar2, params.nbar3
    return DressedRates(
        gamma0=0.5 * (g2 * (1 + 2 * n2) * w2 / 2 + g3 * (1 + 2 * n3) * w3 / 2),
        gamma1=0.5 * (g2 * (1 + n2) * w3 + g3 * (1 + n3) * w2),
        gamma2=0.5 * (g2 * n2 * w3 + g3 * n3 * w2),
    )


# (from level, to level, rate attribute); levels are 0-based dressed indices
_CHANNELS = (
    (1, 0, "gamma1"), (2, 0, "gamma1"),
    (0, 1, "gamma2"), (0, 2, "gamma2"),
    (1, 2, "gamma0"), (2, 1, "gamma0"),
)


def pauli_generator(params: SystemParams | DressedRates, basis: SymmetricBasis | None = None) -> np.ndarray:
    """Rate matrix over dressed occupation states; columns sum to zero.

    ``W[j, i]`` is the rate from state ``i`` to state ``j``. Moving one atom
    from dressed level ``a`` to ``b`` happens at ``2 * Gamma * (m_b + 1) * m_a``.
    Accepts either physical parameters (which must be at ``delta == 0``) or a
    :class:`DressedRates` directly, in which case ``basis`` is required.
    """
    if isinstance(params, SystemParams):
        if params.delta != 0:
            raise UnsupportedRegimeError(
                "secular form valid at two-photon resonance only (delta must be 0); "
                "use the bare route for detuned scans")
        if basis is None:
            basis = enumerate_states(params.n_atoms)
        elif basis.n_atoms != params.n_atoms:
            raise InvalidParameterError("basis and params disagree on the number of atoms")
        r = rates(params)
    else:
        if basis is None:
            raise InvalidParameterError("a basis is required when passing rates directly")
        r = params
    d = basis.dim
    w = np.zeros((d, d))
    for i, m in enumerate(basis.states):
        for a, b, name in _CHANNELS:
            if m[a] == 0:
                continue
            target = list(m)
            target[a] -= 1
            target[b] += 1
            w[basis.index[tuple(target)], i] += 2.0 * getattr(r, name) * (m[b] + 1) * m[a]
    w[np.diag_indices(d)] = -w.sum(axis=0)
    return w


def pauli_steady_state(w: np.ndarray) -> np.ndarray:
    """Stationary distribution of a column generator via GTH elimination.

    The Grassmann-Taksar-Heyman reduction never subtracts, so small
    probabilities keep full relative accuracy. State 0 is eliminated last;
    for the dressed generator that is ``(N, 0, 0)``, which keeps the
    absorbing case ``Gamma2 == 0`` well defined.
    """
    q = np.array(w, dtype=float).T.copy()  # row convention: q[i, j] = rate i -> j
    n = q.shape[0]
    off = q - np.diag(np.diag(q))
    if np.any(off < 0) or np.any(np.abs(w.sum(axis=0)) > 1e-9 * max(1.0, np.abs(w).max())):
        raise InvalidParameterError("not a generator: need non-negative off-diagonals and zero column sums")
    q = off
    for k in range(n - 1, 0, -1):
        out = q[k, :k].sum()
        if out <= 0:
            raise NumericalError("generator is reducible: a state has no escape toward the reference state")
        q[:k, k] /= out
        q[:k, :k] += np.outer(q[:k, k], q[k, :k])
    p = np.zeros(n)
    p[0] = 1.0
    for k in range(1, n):
        p[k] = p[:k] @ q[:k, k]
    return p / p.sum()


def dressed_upper_population(p: np.ndarray, basis: SymmetricBasis) -> float:
    """Excited bare-level population ``(N - <R11>) / 2`` for a dressed distribution."""
    occ = basis.occupations()
    return float(0.5 * np.dot(p, occ[:, 1] + occ[:, 2]))


def dressed_steady_state(params: SystemParams) -> tuple[np.ndarray, SymmetricBasis]:
    basis = enumerate_states(params.n_atoms)
    return pauli_steady_state(pauli_generator(params, basis)), basis


def steady_upper_population(params: SystemParams) -> float:
    p, basis = dressed_steady_state(params)
    return dressed_upper_population(p, basis)
