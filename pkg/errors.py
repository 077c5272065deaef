"""
Exception hierarchy for ringradiant
"""


class RingRadiantError(Exception):
    """Base class for every error raised by the ringradiant modules."""


class InputDomainError(RingRadiantError, ValueError):
    """An argument lies outside the domain an operation is defined on."""


class SingularityError(InputDomainError):
    """Evaluation at a point where the integrand or profile is singular."""


class ToleranceError(RingRadiantError, ArithmeticError):
    """Quadrature did not reach the requested tolerance, fallback included."""


class DegeneratePointError(RingRadiantError, ArithmeticError):
    """A limiting value (e.g. temperature where rho vanishes) is undefined."""


class InconclusiveError(RingRadiantError):
    """Too many degenerate samples to decide a property."""


class ConfigError(RingRadiantError, ValueError):
    """Experiment configuration could not be parsed or validated."""
