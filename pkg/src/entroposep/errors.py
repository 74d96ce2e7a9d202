"""Exception hierarchy shared by every module."""


class EntroposepError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(EntroposepError, ValueError):
    """Input violates a structural invariant (Hermiticity, trace, PSD, norm)."""


class UsageError(EntroposepError, ValueError):
    """Arguments are inconsistent or missing (dims unset, bad config)."""


class DomainError(EntroposepError, ValueError):
    """Input lies outside the mathematical domain of the operation."""


class RangeError(EntroposepError, OverflowError):
    """Arguments would overflow double-precision exponentials."""


class NumericError(EntroposepError, ArithmeticError):
    """A non-finite value appeared during integration.

    The offending sample is kept on ``sample`` for inspection.
    """

    def __init__(self, message, sample=None):
        super().__init__(message)
        self.sample = sample


class IterationError(EntroposepError, RuntimeError):
    """An iterative solver ran out of iterations."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class EfficiencyError(EntroposepError, RuntimeError):
    """A sampler's expected acceptance rate is too small to be useful."""
