"""Coherent population trapping of collective three-level Lambda atoms in a thermal field."""

__version__ = "0.1.0"

from .params import (  # noqa: E402
    CPTError,
    DegenerateSteadyStateError,
    InvalidParameterError,
    NumericalError,
    SystemParams,
    UnsupportedRegimeError,
)

__all__ = [
    "CPTError",
    "DegenerateSteadyStateError",
    "InvalidParameterError",
    "NumericalError",
    "SystemParams",
    "UnsupportedRegimeError",
    "__version__",
]
