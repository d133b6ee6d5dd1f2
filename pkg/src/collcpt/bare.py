"""Exact Lindblad dynamics in the bare symmetric basis.

Density matrices are dense ``(d, d)`` complex arrays and are vectorized
row-major, so ``vec(A @ rho @ B) == kron(A, B.T) @ vec(rho)``. The
superoperator is kept sparse: at the N cap (d = 91) a dense copy would need
over a gigabyte.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import solve_ivp

from .basis import SymmetricBasis, collective_operator, enumerate_states
from .params import (
    DegenerateSteadyStateError,
    InvalidParameterError,
    NumericalError,
    SystemParams,
    UnsupportedRegimeError,
)

log = logging.getLogger(__name__)

MAX_ATOMS = 12
# above this dimension the least-squares/SVD path is replaced by a sparse direct solve
DENSE_SOLVE_MAX_DIM = 28

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
POSITIVITY_TOL = 1e-8


def _check_basis(params: SystemParams, basis: SymmetricBasis) -> None:
    if basis.n_atoms != params.n_atoms:
        raise InvalidParameterError(
            f"basis built for N={basis.n_atoms} but params have N={params.n_atoms}")


def build_hamiltonian(params: SystemParams, basis: SymmetricBasis | None = None) -> np.ndarray:
    """Laser coupling plus two-photon detuning, in units of hbar * gamma2."""
    if basis is None:
        basis = enumerate_states(params.n_atoms)
    _check_basis(params, basis)
    S = lambda a, b: collective_operator(basis, a, b)  # noqa: E731
    h = params.delta * (S(2, 2) - S(3, 3))
    h = h + params.omega2 * (S(1, 2) + S(2, 1)) + params.omega3 * (S(1, 3) + S(3, 1))
    return h.astype(complex)


def jump_operators(params: SystemParams, basis: SymmetricBasis) -> list[tuple[float, np.ndarray]]:
    """(rate, operator) pairs with the dissipator written as ``rate * D[A]``.

    Each damping term ``(1+n)[S_g1 rho, S_1g] + n[S_1g rho, S_g1] + h.c.``
    expands to ``2(1+n) D[S_g1] + 2n D[S_1g]`` with
    ``D[A]rho = A rho A^+ - {A^+ A, rho}/2``.
    """
    S = lambda a, b: collective_operator(basis, a, b)  # noqa: E731
    out = []
    for g, gamma, nbar in ((2, params.gamma2, params.nbar2), (3, params.gamma3, params.nbar3)):
        out.append((2.0 * gamma * (1.0 + nbar), S(g, 1)))
        if nbar > 0:
            out.append((2.0 * gamma * nbar, S(1, g)))
    return out


def build_liouvillian(params: SystemParams, basis: SymmetricBasis | None = None) -> sp.csr_matrix:
    """Sparse ``d**2 x d**2`` generator with ``vec(drho/dt) = L @ vec(rho)``."""
    if params.n_atoms > MAX_ATOMS:
        raise UnsupportedRegimeError(
            f"exact Liouvillian route is capped at N={MAX_ATOMS}; "
            "use the dressed or analytic route for larger ensembles")
    if basis is None:
        basis = enumerate_states(params.n_atoms)
    _check_basis(params, basis)
    d = basis.dim
    eye = sp.identity(d, dtype=complex, format="csr")
    h = sp.csr_matrix(build_hamiltonian(params, basis))
    L = -1j * (sp.kron(h, eye) - sp.kron(eye, h.T))
    for rate, a in jump_operators(params, basis):
        a = sp.csr_matrix(a.astype(complex))
        ada = (a.conj().T @ a).tocsr()
        L = L + rate * (sp.kron(a, a.conj()) - 0.5 * sp.kron(ada, eye) - 0.5 * sp.kron(eye, ada.T))
    return L.tocsr()


def _dim_of(L) -> int:
    d = int(round(np.sqrt(L.shape[0])))
    if d * d != L.shape[0] or L.shape[0] != L.shape[1]:
        raise InvalidParameterError(f"superoperator shape {L.shape} is not d**2 x d**2")
    return d


def check_density_matrix(rho: np.ndarray, scale: float = 1.0) -> None:
    """Raise :class:`NumericalError` unless ``rho`` is Hermitian, unit-trace and PSD.

    ``scale`` multiplies the default tolerances.
    """
    herm = np.max(np.abs(rho - rho.conj().T))
    if herm > HERMITIAN_TOL * scale:
        raise NumericalError(f"density matrix not Hermitian (deviation {herm:.3g})")
    tr = abs(np.trace(rho) - 1.0)
    if tr > TRACE_TOL * scale:
        raise NumericalError(f"density matrix trace deviates from 1 by {tr:.3g}")
    lam = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0]
    if lam < -POSITIVITY_TOL * scale:
        raise NumericalError(f"density matrix has negative eigenvalue {lam:.3g}")


def evolve(L, rho0: np.ndarray, t_final: float, tol: float = 1e-9,
           method: str = "DOP853") -> np.ndarray:
    """Integrate the master equation from ``rho0`` up to ``t_final``.

    Adaptive explicit Runge-Kutta with embedded error control; ``tol`` is
    used as both relative and absolute local tolerance. The result is
    re-Hermitized and checked against the density-matrix invariants with
    tolerances inflated by ``100 * tol``.
    """
    d = _dim_of(L)
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.shape != (d, d):
        raise InvalidParameterError(f"rho0 has shape {rho0.shape}, expected {(d, d)}")
    check_density_matrix(rho0)
    if t_final < 0:
        raise InvalidParameterError("t_final must be non-negative")
    if t_final == 0:
        return rho0.copy()
    sol = solve_ivp(lambda t, y: L @ y, (0.0, t_final), rho0.ravel(),
                    method=method, rtol=tol, atol=tol)
    if not sol.success:
        raise NumericalError(f"integration failed: {sol.message}")
    rho = sol.y[:, -1].reshape(d, d)
    drift = np.max(np.abs(rho - rho.conj().T))
    rho = 0.5 * (rho + rho.conj().T)
    check_density_matrix(rho, scale=max(1.0, 100 * tol / HERMITIAN_TOL))
    log.debug("evolve: t=%g, %d rhs evaluations, hermiticity drift %.2e", t_final, sol.nfev, drift)
    return rho


@dataclass(frozen=True)
class SteadyStateResult:
    rho: np.ndarray
    residual: float
    """``||L vec(rho)|| / ||L||`` (Frobenius norms)."""
    gap: float
    """Second-smallest over largest singular value (dense path) or inverse
    condition estimate of the constrained system (sparse path)."""


def solve_steady_state(L, residual_tol: float = 1e-10, gap_tol: float = 1e-13) -> SteadyStateResult:
    """Null vector of ``L`` normalized to unit trace.

    Small systems append the trace functional as an extra row and solve in
    the least-squares sense, checking uniqueness through the singular-value
    gap. Larger systems replace the first population equation by the trace
    row and use a sparse LU solve with a condition-number estimate.
    """
    d = _dim_of(L)
    L = sp.csr_matrix(L)
    trace_row = np.zeros(d * d, dtype=complex)
    trace_row[:: d + 1] = 1.0
    norm_L = spla.norm(L)
    if d <= DENSE_SOLVE_MAX_DIM:
        dense = L.toarray()
        sv = scipy.linalg.svdvals(dense)
        gap = sv[-2] / sv[0] if sv[0] > 0 else 0.0
        if gap < gap_tol:
            raise DegenerateSteadyStateError(
                f"steady state not unique: singular values {sv[-1]:.3g}, {sv[-2]:.3g} "
                f"(max {sv[0]:.3g})")
        a = np.vstack([dense, trace_row * norm_L / d])
        b = np.zeros(d * d + 1, dtype=complex)
        b[-1] = norm_L / d
        x = scipy.linalg.lstsq(a, b)[0]
    else:
        m = L.tolil()
        m[0, :] = trace_row
        m = m.tocsc()
        b = np.zeros(d * d, dtype=complex)
        b[0] = 1.0
        try:
            lu = spla.splu(m)
        except RuntimeError as exc:
            raise DegenerateSteadyStateError(f"steady state not unique: {exc}") from exc
        x = lu.solve(b)
        inv = spla.LinearOperator(m.shape, matvec=lu.solve,
                                  rmatvec=lambda v: lu.solve(v, trans="H"), dtype=complex)
        gap = 1.0 / (spla.onenormest(inv) * spla.onenormest(m))
        if gap < gap_tol:
            raise DegenerateSteadyStateError(f"constrained steady-state system is singular (rcond ~ {gap:.3g})")
    rho = x.reshape(d, d)
    rho = 0.5 * (rho + rho.conj().T)
    rho /= np.trace(rho).real
    residual = np.linalg.norm(L @ rho.ravel()) / norm_L
    if residual > residual_tol:
        raise NumericalError(f"steady-state residual {residual:.3g} exceeds {residual_tol:.1g}")
    check_density_matrix(rho)
    return SteadyStateResult(rho, float(residual), float(gap))


def steady_state_numeric(L) -> np.ndarray:
    """Unique unit-trace density matrix annihilated by ``L``."""
    return solve_steady_state(L).rho


def upper_population(rho: np.ndarray, basis: SymmetricBasis) -> float:
    """Total excited-level population ``Tr(S11 rho)``, between 0 and N."""
    return float(np.dot(basis.occupations()[:, 0], np.real(np.diag(rho))))


def steady_upper_population(params: SystemParams) -> float:
    basis = enumerate_states(params.n_atoms)
    return upper_population(steady_state_numeric(build_liouvillian(params, basis)), basis)
