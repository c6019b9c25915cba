"""Numerical certificates for degree-4 rational maps from (1, d)-polarized abelian surfaces to the plane."""

__version__ = "0.1.0"

from .errors import IrrmapError, InvariantViolation, NumericalFailure  # noqa: E402

__all__ = ["IrrmapError", "InvariantViolation", "NumericalFailure", "__version__"]
