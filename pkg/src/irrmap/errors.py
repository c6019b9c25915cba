"""Exception hierarchy.

Two families matter to callers: :class:`InvariantViolation` (a mathematical
contract failed; CLI exit code 2) and :class:`NumericalFailure` (the numerics
could not reach a trustworthy answer; CLI exit code 3).
"""


class IrrmapError(Exception):
    pass


class InvariantViolation(IrrmapError):
    pass


class NumericalFailure(IrrmapError):
    pass


class InvalidPeriodMatrix(InvariantViolation):
    pass


class DimensionMismatch(InvariantViolation):
    pass


class ParityViolation(InvariantViolation):
    pass


class SubsystemTooSmall(InvariantViolation):
    pass


class ProfileViolation(InvariantViolation):
    pass


class InconsistentDegrees(InvariantViolation):
    pass


class DegreeBoundViolated(InvariantViolation):
    """Measured deg(phi) * deg(S) exceeded 8."""


class MeasuredDegreeTwo(InvariantViolation):
    """A dominant map A --> P^2 of degree 2 cannot exist; seeing one flags numerics."""


class InvalidAuditInput(InvariantViolation):
    pass


class InvalidConfig(InvariantViolation):
    pass


class RankAmbiguous(NumericalFailure):
    pass


class FiberSearchFailed(NumericalFailure):
    pass


class CountUnstable(NumericalFailure):
    pass


class BadCenter(NumericalFailure):
    pass
