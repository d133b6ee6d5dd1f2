"""Physical parameters of the driven Lambda ensemble and shared exceptions.

All rates and frequencies are in units of ``gamma2`` (so ``gamma2 == 1`` by
convention). ``omega2``/``omega3`` are the Rabi half-frequencies, ``gamma2``/
``gamma3`` the decay half-rates, ``nbar2``/``nbar3`` the mean thermal photon
numbers on the 1-2 and 1-3 transitions and ``delta`` the two-photon detuning.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass


class CPTError(Exception):
    """Base class for errors raised by this package."""


class InvalidParameterError(CPTError, ValueError):
    pass


class UnsupportedRegimeError(CPTError, ValueError):
    """A route was asked for a regime it cannot represent (e.g. detuned secular form)."""


class NumericalError(CPTError, RuntimeError):
    """A solver failed or its residual exceeded tolerance."""


class DegenerateSteadyStateError(NumericalError):
    pass


@dataclass(frozen=True)
class SystemParams:
    omega2: float
    omega3: float
    gamma2: float = 1.0
    gamma3: float = 1.0
    nbar2: float = 0.0
    nbar3: float = 0.0
    delta: float = 0.0
    n_atoms: int = 1

    def __post_init__(self):
        for name in ("omega2", "omega3", "gamma2", "gamma3", "nbar2", "nbar3", "delta"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or isinstance(value, bool) or not math.isfinite(value):
                raise InvalidParameterError(f"{name} must be a finite real number, got {value!r}")
        if self.omega2 < 0 or self.omega3 < 0:
            raise InvalidParameterError("Rabi frequencies must be non-negative")
        if self.omega2 == 0 and self.omega3 == 0:
            raise InvalidParameterError("at least one Rabi frequency must be nonzero")
        if self.gamma2 <= 0 or self.gamma3 <= 0:
            raise InvalidParameterError("decay rates must be strictly positive")
        if self.nbar2 < 0 or self.nbar3 < 0:
            raise InvalidParameterError("thermal photon numbers must be non-negative")
        n = self.n_atoms
        if isinstance(n, bool) or not isinstance(n, int) or n < 1:
            raise InvalidParameterError(f"n_atoms must be a positive integer, got {n!r}")

    @property
    def eta(self) -> float:
        """Decay-rate ratio gamma3 / gamma2."""
        return self.gamma3 / self.gamma2

    @property
    def omega(self) -> float:
        """Generalized Rabi frequency sqrt(omega2**2 + omega3**2)."""
        return math.hypot(self.omega2, self.omega3)

    def replace(self, **changes) -> "SystemParams":
        return dataclasses.replace(self, **changes)

    def swapped(self) -> "SystemParams":
        """Exchange the roles of ground levels 2 and 3 (and flip the detuning)."""
        return self.replace(
            omega2=self.omega3, omega3=self.omega2,
            gamma2=self.gamma3, gamma3=self.gamma2,
            nbar2=self.nbar3, nbar3=self.nbar2,
            delta=-self.delta,
        )

    @classmethod
    def symmetric(cls, omega2: float, omega3: float, nbar: float, n_atoms: int = 1,
                  delta: float = 0.0) -> "SystemParams":
        """Equal decay rates and equal thermal occupation on both transitions."""
        return cls(omega2=omega2, omega3=omega3, nbar2=nbar, nbar3=nbar,
                   delta=delta, n_atoms=n_atoms)

    @classmethod
    def field_names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in dataclasses.fields(cls))
