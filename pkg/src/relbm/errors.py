"""Exception hierarchy shared by every module."""


class RelBMError(Exception):
    """Base class for library errors."""


class DomainError(RelBMError, ValueError):
    """An argument lies outside the domain of the operation."""


class BoundViolationError(DomainError):
    """|zeta| exceeds the log-volatility bound c / sigma**2."""


class ConvergenceError(RelBMError, ArithmeticError):
    """A numerical routine failed to reach the requested tolerance."""


class TailMassError(ConvergenceError):
    """A truncated grid drops more probability mass than allowed."""


class BoundaryWarning(UserWarning):
    """zeta sits exactly on the log-volatility bound."""
