"""Exception types raised across the package."""


class EntboundsError(Exception):
    """Base class for all package errors."""


class NotSquare(EntboundsError, ValueError):
    """Matrix operation requires a square matrix."""


class NotHermitian(EntboundsError, ValueError):
    """Matrix is not Hermitian within the requested tolerance."""


class DimensionMismatch(EntboundsError, ValueError):
    """Operands have inconsistent dimensions."""


class OddDimension(EntboundsError, ValueError):
    """Operation requires an even dimension (the flip unitary needs V^T = -V)."""


class DomainError(EntboundsError, ValueError):
    """Scalar argument outside the admissible interval."""


class NotNormalized(EntboundsError, ValueError):
    """State vector is not normalized within tolerance."""


class WrongLength(EntboundsError, ValueError):
    """Schmidt vector has the wrong number of coefficients."""


class ConvergenceFailure(EntboundsError, RuntimeError):
    """Iterative solver failed to converge."""


class ParseError(EntboundsError, ValueError):
    """Input file could not be parsed."""


class CoverageError(EntboundsError, RuntimeError):
    """Too many grid cells inside the pure-state region had no solution.

    Carries the coverage report dict as ``report``.
    """

    def __init__(self, message, report):
        super().__init__(message)
        self.report = report
