"""Exception hierarchy shared by every module."""


class PropsignError(Exception):
    """Base class for all library errors."""


class DomainError(PropsignError, ValueError):
    """Input outside the domain where a routine is defined."""


class EvaluationError(PropsignError, ArithmeticError):
    """An integrand produced a non-finite value at a quadrature node."""

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class AccuracyError(PropsignError, ArithmeticError):
    """A numerical result failed its own convergence or tail check."""


class RangeError(PropsignError, OverflowError):
    """A computation would overflow or diverge."""


class NotInvertibleError(PropsignError):
    """A channel admits no CPTP inverse on the full state space."""


class ConsistencyError(PropsignError):
    """An internal self-check failed (should not happen for valid input)."""


class WitnessInconclusiveError(PropsignError):
    """The non-onto witness configuration is degenerate."""
