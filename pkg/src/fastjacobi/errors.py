"""Exception hierarchy shared by all modules."""


class FastJacobiError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(FastJacobiError, ValueError):
    """Invalid user-supplied parameter (a, b, degree, tolerance, sizes)."""


class DomainError(FastJacobiError, ValueError):
    """Evaluation point outside the region a representation covers."""


class AccuracyError(FastJacobiError, ArithmeticError):
    """A numerical procedure failed to reach its accuracy target."""


class ConsistencyError(FastJacobiError, ArithmeticError):
    """An internal identity that must hold by construction was violated."""


class FormatError(FastJacobiError, ValueError):
    """Malformed or truncated file."""


class AccuracyWarning(UserWarning):
    """A result was returned but its conditioning limits the attainable accuracy."""
