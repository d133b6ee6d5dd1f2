"""Closed-form steady state of the secular dressed dynamics.

The stationary density operator is ``exp(-xi * R11) / Z``: with ``j = N - m1``
atoms outside the dark dressed state and ``r = exp(xi) < 1`` each dressed
occupation state carries weight ``r**j`` (up to the common factor
``exp(-xi N)``), and ``j + 1`` states share each ``j``.

``xi`` is a plain float; ``-inf`` encodes the zero-temperature case in which
all population sits in the collective dark state.

Closed forms contain ``exp(-xi (N + 1))`` and differences that cancel
catastrophically when ``N |xi|`` is small. Three regimes are used:

* ``(N + 1) |xi| >= 1``: the closed forms rewritten in powers of ``r`` (which
  only underflow, never overflow), in float64;
* ``1e-7 <= (N + 1) |xi| < 1``: the same closed forms in multiprecision, with
  working precision raised to cover the cancellation;
* below that: first-order expansion about the uniform distribution.
"""

from __future__ import annotations

import math

import mpmath
import numpy as np
from scipy.special import logsumexp

from .basis import SymmetricBasis, collective_operator, enumerate_states
from .dressed import DressedRates, rates
from .params import InvalidParameterError, SystemParams

SERIES_SPAN = 1e-7
FLOAT_SPAN = 1.0


def xi(params: SystemParams) -> float:
    """Log ratio of up-pumping to down-pumping out of the dark dressed state.

    Returns ``-inf`` when there are no thermal photons.
    """
    o2, o3, eta = params.omega2**2, params.omega3**2, params.eta
    num = o3 * params.nbar2 + eta * o2 * params.nbar3
    den = o3 * (1 + params.nbar2) + eta * o2 * (1 + params.nbar3)
    if num == 0:
        return -math.inf
    return math.log(num / den)


def xi_from_rates(r: DressedRates) -> float:
    if r.gamma1 <= 0:
        raise InvalidParameterError("Gamma1 must be positive")
    return math.log(r.gamma2 / r.gamma1) if r.gamma2 > 0 else -math.inf


# limiting forms of xi

def xi_no_thermal_on_2(params: SystemParams) -> float:
    """``xi`` with ``nbar2 = 0`` substituted (thermal field on 1-3 only)."""
    o2, o3, eta, n3 = params.omega2**2, params.omega3**2, params.eta, params.nbar3
    if n3 == 0:
        return -math.inf
    return math.log(eta * o2 * n3 / (o3 + eta * o2 * (1 + n3)))


def xi_thermal_limit(nbar: float) -> float:
    """``ln(n / (1 + n))``: ``xi`` when one transition's thermal term dominates,
    and exactly ``xi`` when both transitions see the same ``nbar``."""
    if nbar < 0:
        raise InvalidParameterError("nbar must be non-negative")
    return math.log(nbar / (1 + nbar)) if nbar > 0 else -math.inf


def _check(xi_value: float, n_atoms: int) -> tuple[float, int]:
    if isinstance(n_atoms, bool) or not isinstance(n_atoms, (int, np.integer)) or n_atoms < 1:
        raise InvalidParameterError(f"N must be a positive integer, got {n_atoms!r}")
    xi_value = float(xi_value)
    if math.isnan(xi_value) or xi_value > 0:
        raise InvalidParameterError(f"xi must be <= 0, got {xi_value!r}")
    return xi_value, int(n_atoms)


def _mp_dps(x: float, n: int) -> int:
    # bracket terms scale like 1/xi**2 against a result of order N**2 |xi|
    return 40 + 4 * math.ceil(-math.log10(-x)) + 2 * math.ceil(math.log10(n + 1))


def _mp_partition(xm, n: int):
    e = mpmath.exp(xm)
    return (n + 2 - (n + 1) * e - mpmath.exp(-xm * (n + 1))) / ((1 - e) * (1 - 1 / e))


def log_partition(xi_value: float, n_atoms: int) -> float:
    """Natural log of the normalization ``Z`` of ``exp(-xi R11)``.

    ``Z = sum_m (N - m + 1) exp(-xi m)`` in closed form; ``+inf`` at
    ``xi = -inf``.
    """
    x, n = _check(xi_value, n_atoms)
    if x == -math.inf:
        return math.inf
    span = (n + 1) * -x
    if span < SERIES_SPAN:
        # d lnZ / d xi = -<m1> = -N/3 at the uniform point
        return math.log((n + 1) * (n + 2) / 2) - x * n / 3
    if span >= FLOAT_SPAN:
        u = -math.expm1(x)
        r_n1 = math.exp((n + 1) * x)
        s0 = (1 - (n + 2) * r_n1 + (n + 1) * r_n1 * math.exp(x)) / (u * u)
        return -n * x + math.log(s0)
    with mpmath.workdps(_mp_dps(x, n)):
        z = _mp_partition(mpmath.mpf(x), n)
        return float(mpmath.log(z))


def partition_Z(xi_value: float, n_atoms: int) -> float:
    """``Z`` itself; overflows to ``inf`` for large ``N |xi|`` (prefer :func:`log_partition`)."""
    lz = log_partition(xi_value, n_atoms)
    return math.exp(lz) if lz < 709 else math.inf


def _log_weights(x: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Excited-atom counts ``j = 0..N`` and log weights ``ln(j + 1) + j xi``."""
    j = np.arange(n + 1, dtype=float)
    return j, np.log1p(j) + j * x


def moment_R11(xi_value: float, n_atoms: int, k: int = 1) -> float:
    """``<R11**k>`` by direct summation over ``m1`` in log space."""
    x, n = _check(xi_value, n_atoms)
    if isinstance(k, bool) or not isinstance(k, (int, np.integer)) or k < 1:
        raise InvalidParameterError("moment order k must be a positive integer")
    if x == -math.inf:
        return float(n) ** k
    j, lw = _log_weights(x, n)
    m1 = n - j
    mask = m1 > 0
    return float(np.exp(logsumexp(lw[mask] + k * np.log(m1[mask])) - logsumexp(lw)))


def mean_R22(xi_value: float, n_atoms: int) -> float:
    """``<R22> = <R33> = (N - <R11>) / 2``, summed without the subtraction."""
    x, n = _check(xi_value, n_atoms)
    if x == -math.inf:
        return 0.0
    j, lw = _log_weights(x, n)
    if n == 0:
        return 0.0
    return float(0.5 * np.exp(logsumexp(lw[1:] + np.log(j[1:])) - logsumexp(lw)))


def single_atom_upper_population(xi_value: float) -> float:
    """``e^xi / (1 + 2 e^xi)``, the one-atom excited population."""
    x = float(xi_value)
    if x > 0:
        raise InvalidParameterError("xi must be <= 0")
    e = math.exp(x)
    return e / (1 + 2 * e)


def upper_population_analytic(xi_value: float, n_atoms: int) -> float:
    """Total excited population ``Tr(S11 rho)`` of the collective steady state."""
    x, n = _check(xi_value, n_atoms)
    if x == -math.inf:
        return 0.0
    span = (n + 1) * -x
    if span < SERIES_SPAN:
        # Var(j) = N(N+3)/18 under the uniform weights
        return n / 3 + x * n * (n + 3) / 36
    if span >= FLOAT_SPAN:
        r = math.exp(x)
        u = -math.expm1(x)
        r_n1 = math.exp((n + 1) * x)
        r_n2 = r_n1 * r
        num = r - (n + 1) * r_n1 + n * r_n2 - 0.5 * n * (n + 1) * r_n1 * u * u
        den = u * (1 - (n + 2) * r_n1 + (n + 1) * r_n2)
        return num / den
    with mpmath.workdps(_mp_dps(x, n)):
        xm = mpmath.mpf(x)
        e = mpmath.exp(xm)
        bracket = mpmath.mpf(n * (n + 1)) / 2 - (mpmath.exp(-xm * n) + n * e - n - 1) / (1 - e) ** 2
        return float(bracket / (_mp_partition(xm, n) * (1 - 1 / e)))


def steady_distribution(xi_value: float, basis: SymmetricBasis) -> np.ndarray:
    """``exp(-xi m1) / Z`` for every dressed occupation state of ``basis``."""
    x, n = _check(xi_value, basis.n_atoms)
    m1 = basis.occupations()[:, 0]
    if x == -math.inf:
        return (m1 == n).astype(float)
    lw = (n - m1) * x
    return np.exp(lw - logsumexp(lw))


def rho_D2_analytic(xi_value: float, n_atoms: int) -> float:
    """Stationary population of the one-excitation state ``(N-1, 1, 0)``.

    Equal to ``exp(-xi (N-1)) / Z``, evaluated as ``e^xi / S0`` with
    ``S0 = Z e^(xi N)``.
    """
    x, n = _check(xi_value, n_atoms)
    if x == -math.inf:
        return 0.0
    return math.exp(x - (log_partition(x, n) + n * x))


def rho_D2_operator_expectation(xi_value: float, n_atoms: int) -> float:
    """Brute-force evaluation of the ``|D2>`` population as an operator average.

    Computes ``<(R12 R21 + R22 - R11) R11 (R11 - 1) ... (R11 - N + 2)> / N!``
    with explicit matrices on the dressed symmetric basis. Only meant for
    small N as a cross-check of :func:`rho_D2_analytic`.
    """
    x, n = _check(xi_value, n_atoms)
    basis = enumerate_states(n)
    R = lambda a, b: collective_operator(basis, a, b)  # noqa: E731
    eye = np.eye(basis.dim)
    op = R(1, 2) @ R(2, 1) + R(2, 2) - R(1, 1)
    for i in range(n - 1):
        op = op @ (R(1, 1) - i * eye)
    rho = np.diag(steady_distribution(x, basis))
    return float(np.trace(op @ rho)) / math.factorial(n)


def rho_D2_independent(r: DressedRates, n_atoms: int) -> float:
    """``Gamma2 Gamma1^(N-1) / (Gamma1 + 2 Gamma2)^N`` for uncorrelated atoms."""
    if r.gamma1 <= 0:
        raise InvalidParameterError("Gamma1 must be positive")
    if r.gamma2 == 0:
        return 0.0
    n = int(n_atoms)
    return math.exp(math.log(r.gamma2) + (n - 1) * math.log(r.gamma1)
                    - n * math.log(r.gamma1 + 2 * r.gamma2))


def capacity_ratio(params: SystemParams, n_atoms: int | None = None) -> float:
    """Independent-atom over collective ``|D2>`` population.

    Undefined (0/0) without thermal photons; raises in that case.
    """
    n = params.n_atoms if n_atoms is None else n_atoms
    rr = rates(params)
    if rr.gamma2 <= 0:
        raise InvalidParameterError("capacity ratio undefined without thermal excitation (0/0)")
    x = xi_from_rates(rr)
    log_coll = x - (log_partition(x, n) + n * x)
    log_in = math.log(rr.gamma2) + (n - 1) * math.log(rr.gamma1) - n * math.log(rr.gamma1 + 2 * rr.gamma2)
    return math.exp(log_in - log_coll)
