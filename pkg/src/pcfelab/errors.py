"""Exception hierarchy shared by every pcfelab module."""

from __future__ import annotations


class PcfeError(Exception):
    """Base class for all library errors."""


class ParameterError(PcfeError, ValueError):
    """A distribution or candidate parameter is outside its domain."""


class ValidationError(PcfeError, ValueError):
    """Malformed user input: grids, CSV tables, configs."""


class DomainError(PcfeError, ValueError):
    """A function was evaluated outside the set where it is defined."""

    def __init__(self, message: str, abscissa=None):
        super().__init__(message if abscissa is None else f"{message} (at x={abscissa!r})")
        self.abscissa = abscissa


class CapabilityError(PcfeError):
    """The object lacks a capability the operation needs (inverse, derivative, monotonicity)."""


class IntegrandError(PcfeError, ArithmeticError):
    """An integrand or objective returned NaN/inf."""

    def __init__(self, message: str, abscissa=None):
        super().__init__(message if abscissa is None else f"{message} (at x={abscissa!r})")
        self.abscissa = abscissa


class BracketError(PcfeError, ValueError):
    """Root bracket endpoints do not straddle a sign change."""


class MomentError(PcfeError, ArithmeticError):
    """A required moment E|f(X)| looks divergent."""


class PreconditionError(PcfeError, ValueError):
    """An operation's mathematical precondition was checked and failed."""


class ConfigError(PcfeError, ValueError):
    """Config file does not match the schema."""


class SingularityError(IntegrandError):
    """f' vanished where an integrand divides by it."""
