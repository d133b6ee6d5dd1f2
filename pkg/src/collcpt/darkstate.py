"""Collective dark state of the resonantly driven ensemble.

The chain basis follows the excitation path ``|3>, |1>, |2>, |12>, |2^2>, ...,
|2^N>``: even positions hold ``|2^k>`` (k atoms in level 2, the rest in 3) and
odd positions ``|12^k>`` (one atom excited, k in level 2). That is ``2N + 1``
states.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import gammaln, logsumexp

from .basis import SymmetricBasis, collective_operator, embedding, enumerate_states
from .dressed import DressedRates, dressed_vectors, pauli_generator, rates
from .params import InvalidParameterError, SystemParams, UnsupportedRegimeError

MAX_VECTOR_ATOMS = 40


def _resonant(params: SystemParams, what: str) -> None:
    if params.delta != 0:
        raise UnsupportedRegimeError(f"{what} is defined at two-photon resonance only (delta = 0)")


def chain_states(n_atoms: int) -> list[tuple[int, int, int]]:
    """Occupation triples of the chain basis, in chain order."""
    out = []
    for k in range(n_atoms + 1):
        out.append((0, k, n_atoms - k))
        if k < n_atoms:
            out.append((1, k, n_atoms - 1 - k))
    return out


def build_chain_hamiltonian(params: SystemParams) -> np.ndarray:
    """Tridiagonal coupling matrix along the excitation path.

    Off-diagonals alternate ``omega3 sqrt(N - k)`` and ``omega2 sqrt(k + 1)``;
    the diagonal alternates ``-N delta`` (ground chain states) and
    ``-(N - 1) delta`` (singly excited).
    """
    n = params.n_atoms
    dim = 2 * n + 1
    h = np.zeros((dim, dim))
    for k in range(n + 1):
        h[2 * k, 2 * k] = -n * params.delta
        if k < n:
            h[2 * k + 1, 2 * k + 1] = -(n - 1) * params.delta
            h[2 * k, 2 * k + 1] = h[2 * k + 1, 2 * k] = params.omega3 * math.sqrt(n - k)
            h[2 * k + 1, 2 * k + 2] = h[2 * k + 2, 2 * k + 1] = params.omega2 * math.sqrt(k + 1)
    return h


@dataclass(frozen=True)
class DarkStateVector:
    coefficients: np.ndarray
    """Amplitudes over the chain basis (length ``2N + 1``)."""
    theta: float
    """Mixing angle with ``tan(theta) = omega3 / omega2``."""

    @property
    def ground_amplitudes(self) -> np.ndarray:
        """Amplitudes on ``|2^k>``, k = 0..N."""
        return self.coefficients[::2]


def _check_size(n: int) -> None:
    if n > MAX_VECTOR_ATOMS:
        raise UnsupportedRegimeError(f"dark-state vectors are limited to N <= {MAX_VECTOR_ATOMS}")


def _log_binom(n: int, k: np.ndarray) -> np.ndarray:
    return gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)


def _assemble(n: int, log_abs: np.ndarray, theta: float) -> DarkStateVector:
    k = np.arange(n + 1)
    c = np.zeros(2 * n + 1)
    c[::2] = np.where(k % 2 == 0, 1.0, -1.0) * np.exp(log_abs)
    return DarkStateVector(c, theta)


def dark_state_recurrence(params: SystemParams) -> DarkStateVector:
    """Zero mode from ``c_{2k+1} = (-omega3/omega2)^k sqrt(C(N, k)) c_1``, normalized."""
    _resonant(params, "the dark state")
    n = params.n_atoms
    _check_size(n)
    if params.omega2 == 0:
        raise InvalidParameterError("recurrence pivot omega2 vanishes; use dark_state_closed_form")
    k = np.arange(n + 1)
    with np.errstate(divide="ignore"):
        log_abs = k * math.log(params.omega3 / params.omega2) if params.omega3 > 0 else np.where(k == 0, 0.0, -np.inf)
    log_abs = log_abs + 0.5 * _log_binom(n, k)
    log_abs = log_abs - 0.5 * logsumexp(2 * log_abs)
    return _assemble(n, log_abs, math.atan2(params.omega3, params.omega2))


def dark_state_closed_form(params: SystemParams) -> DarkStateVector:
    """``cos^N(theta) sum_k C(N,k)^(1/2) (-tan theta)^k |2^k>``.

    Written as ``cos^(N-k) (-sin)^k`` so ``theta = pi/2`` stays finite.
    """
    _resonant(params, "the dark state")
    n = params.n_atoms
    _check_size(n)
    theta = math.atan2(params.omega3, params.omega2)
    k = np.arange(n + 1)
    cos, sin = math.cos(theta), math.sin(theta)
    if params.omega2 == 0:
        cos = 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        log_abs = 0.5 * _log_binom(n, k)
        log_abs = log_abs + np.where(k < n, (n - k) * np.log(cos), 0.0)
        log_abs = log_abs + np.where(k > 0, k * np.log(sin), 0.0)
    return _assemble(n, log_abs, theta)


def dark_state(params: SystemParams) -> DarkStateVector:
    """Normalized zero-eigenvalue eigenvector of the chain Hamiltonian."""
    if params.omega2 == 0:
        return dark_state_closed_form(params)
    return dark_state_recurrence(params)


def dark_state_symmetric(params: SystemParams, basis: SymmetricBasis | None = None) -> np.ndarray:
    """Dark state as amplitudes over the bare symmetric basis."""
    if basis is None:
        basis = enumerate_states(params.n_atoms)
    vec = np.zeros(basis.dim)
    for amp, state in zip(dark_state(params).coefficients, chain_states(params.n_atoms)):
        vec[basis.index[state]] = amp
    return vec


def _psi1_product(params: SystemParams) -> np.ndarray:
    psi1 = dressed_vectors(params)[0]
    out = np.ones(1)
    for _ in range(params.n_atoms):
        out = np.kron(out, psi1)
    return out


def product_form_overlap(params: SystemParams, keep: int | None = None) -> float:
    """``|<D|psi1 x ... x psi1>|**2`` from an explicit N-fold tensor product.

    ``keep`` truncates the dark state to its first ``keep`` ground terms
    ``k < keep`` (renormalized) before comparing.
    """
    _resonant(params, "the product form")
    basis = enumerate_states(params.n_atoms)
    d = dark_state_symmetric(params, basis)
    if keep is not None:
        ground = [basis.index[(0, k, params.n_atoms - k)] for k in range(keep, params.n_atoms + 1)]
        d = d.copy()
        d[ground] = 0.0
        d /= np.linalg.norm(d)
    amplitudes = embedding(basis).T @ _psi1_product(params)
    return float(abs(np.dot(d, amplitudes)) ** 2)


def dressed_to_bare(params: SystemParams, basis: SymmetricBasis | None = None) -> np.ndarray:
    """Unitary taking dressed occupation states to bare symmetric states.

    Built from the N-fold tensor power of the single-atom dressed basis,
    so only small N are supported.
    """
    if basis is None:
        basis = enumerate_states(params.n_atoms)
    u1 = np.column_stack(dressed_vectors(params))
    u = np.ones((1, 1))
    for _ in range(basis.n_atoms):
        u = np.kron(u, u1)
    iso = embedding(basis)
    return iso.T @ u @ iso


def d2_d3_states(params: SystemParams, basis: SymmetricBasis | None = None) -> tuple[np.ndarray, np.ndarray]:
    """``|D2>`` and ``|D3>`` as unit vectors in dressed occupation labels.

    One atom promoted from the dark dressed state to ``psi2`` (resp. ``psi3``):
    occupation ``(N-1, 1, 0)`` and ``(N-1, 0, 1)``.
    """
    _resonant(params, "|D2>/|D3>")
    if basis is None:
        basis = enumerate_states(params.n_atoms)
    n = basis.n_atoms
    d2 = np.zeros(basis.dim)
    d3 = np.zeros(basis.dim)
    d2[basis.index[(n - 1, 1, 0)]] = 1.0
    d3[basis.index[(n - 1, 0, 1)]] = 1.0
    return d2, d3


def dark_state_dressed(basis: SymmetricBasis) -> np.ndarray:
    vec = np.zeros(basis.dim)
    vec[basis.index[(basis.n_atoms, 0, 0)]] = 1.0
    return vec


def dressed_hamiltonian(params: SystemParams, basis: SymmetricBasis | None = None) -> np.ndarray:
    """``Omega (R22 - R33)`` on the dressed occupation basis."""
    if basis is None:
        basis = enumerate_states(params.n_atoms)
    return params.omega * (collective_operator(basis, 2, 2) - collective_operator(basis, 3, 3))


class DarkRates(NamedTuple):
    out_rate: float
    in_rate_d2: float
    in_rate_d3: float
    out_factor: int
    """Integer multiplier of Gamma2 in the outflow (4N)."""
    in_factor: int
    """Integer multiplier of Gamma1 in each inflow (2N)."""


def dark_rate_coefficients(params: SystemParams) -> DarkRates:
    """Population flow in and out of ``(N, 0, 0)`` read off the Pauli generator.

    The integer occupancy factors come from generators with unit rates, so
    they are exact; the physical rates are the factors times Gamma.
    """
    _resonant(params, "dark-state rate coefficients")
    basis = enumerate_states(params.n_atoms)
    n = basis.n_atoms
    dark = basis.index[(n, 0, 0)]
    d2 = basis.index[(n - 1, 1, 0)]
    d3 = basis.index[(n - 1, 0, 1)]
    w_up = pauli_generator(DressedRates(0.0, 0.0, 1.0), basis)
    w_down = pauli_generator(DressedRates(0.0, 1.0, 0.0), basis)
    out_factor = int(round(-w_up[dark, dark]))
    in2, in3 = int(round(w_down[dark, d2])), int(round(w_down[dark, d3]))
    if in2 != in3 or out_factor != -w_up[dark, dark] or in2 != w_down[dark, d2]:
        raise AssertionError("occupancy factors are not integral")
    r = rates(params)
    return DarkRates(out_factor * r.gamma2, in2 * r.gamma1, in3 * r.gamma1, out_factor, in2)
