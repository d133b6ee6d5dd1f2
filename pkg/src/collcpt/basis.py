"""Permutation-symmetric subspace of N three-level atoms.

States are occupation triples ``(m1, m2, m3)`` with ``m1 + m2 + m3 == N``,
ordered lexicographically descending in ``(m1, m2)``. The same labels serve
for bare levels |1>,|2>,|3> and for single-atom dressed states, so the
operators built here double as the collective dressed operators ``R_ab``.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .params import InvalidParameterError

Triple = tuple[int, int, int]

# full tensor-product space grows as 3**N
MAX_EMBED_ATOMS = 8


@dataclass(frozen=True)
class SymmetricBasis:
    n_atoms: int
    states: tuple[Triple, ...]
    index: dict[Triple, int] = field(compare=False, hash=False, repr=False)

    @property
    def dim(self) -> int:
        return len(self.states)

    def __len__(self) -> int:
        return len(self.states)

    def occupations(self) -> np.ndarray:
        """Integer array of shape (dim, 3) with the occupation triples."""
        return np.array(self.states, dtype=np.int64).reshape(-1, 3)


def _check_n(n) -> int:
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
        raise InvalidParameterError(f"number of atoms must be a positive integer, got {n!r}")
    return int(n)


@functools.lru_cache(maxsize=None)
def enumerate_states(n_atoms: int) -> SymmetricBasis:
    """Symmetric basis for ``n_atoms`` atoms; ``(N+1)(N+2)/2`` states."""
    n = _check_n(n_atoms)
    states = tuple(
        (m1, m2, n - m1 - m2)
        for m1 in range(n, -1, -1)
        for m2 in range(n - m1, -1, -1)
    )
    return SymmetricBasis(n, states, {s: i for i, s in enumerate(states)})


def _level(alpha) -> int:
    if alpha not in (1, 2, 3):
        raise InvalidParameterError(f"level index must be 1, 2 or 3, got {alpha!r}")
    return alpha - 1


@functools.lru_cache(maxsize=None)
def _collective_operator(n_atoms: int, a: int, b: int) -> np.ndarray:
    basis = enumerate_states(n_atoms)
    op = np.zeros((basis.dim, basis.dim))
    for col, m in enumerate(basis.states):
        if a == b:
            op[col, col] = m[a]
            continue
        if m[b] == 0:
            continue
        target = list(m)
        target[a] += 1
        target[b] -= 1
        op[basis.index[tuple(target)], col] = math.sqrt((m[a] + 1) * m[b])
    op.flags.writeable = False
    return op


def collective_operator(basis: SymmetricBasis, alpha: int, beta: int) -> np.ndarray:
    """Matrix of ``S_ab = sum_j |a>_j <b|`` on the symmetric subspace (read-only)."""
    return _collective_operator(basis.n_atoms, _level(alpha), _level(beta))


def embedding(basis: SymmetricBasis) -> np.ndarray:
    """Isometry from the symmetric basis into the full ``3**N`` product space.

    Column ``i`` is the normalized symmetrization of the product states with
    occupation ``basis.states[i]``; single-atom index 0, 1, 2 stands for level
    1, 2, 3. Intended for brute-force cross-checks, so N is capped.
    """
    n = basis.n_atoms
    if n > MAX_EMBED_ATOMS:
        raise InvalidParameterError(f"explicit tensor embedding limited to N <= {MAX_EMBED_ATOMS}")
    iso = np.zeros((3**n, basis.dim))
    for config in itertools.product(range(3), repeat=n):
        occ = (config.count(0), config.count(1), config.count(2))
        flat = 0
        for level in config:
            flat = 3 * flat + level
        iso[flat, basis.index[occ]] = 1.0
    iso /= np.sqrt(iso.sum(axis=0))
    return iso


def single_atom_operator(n_atoms: int, op: np.ndarray, site: int) -> np.ndarray:
    """``op`` (3x3) acting on atom ``site`` of the full product space."""
    return np.kron(np.kron(np.eye(3**site), op), np.eye(3 ** (n_atoms - site - 1)))
