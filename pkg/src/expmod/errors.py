"""Exception hierarchy shared by all modules."""


class ExpmodError(Exception):
    """Base class for library errors."""


class DimensionError(ExpmodError, ValueError):
    """Inputs have incompatible lengths or orders."""


class LengthMismatchError(DimensionError):
    """A substitution word is too short for the word it is applied to."""


class RangeError(ExpmodError, ValueError):
    """An index, distance or window lies outside the admissible range."""


class ResourceLimitError(ExpmodError):
    """A requested size exceeds a configured limit."""


class ConvergenceError(ExpmodError, ArithmeticError):
    """An iterative solver hit its iteration cap."""


class NotCertifiedError(ExpmodError):
    """A certificate could not be produced within its search cap."""


class PrecisionExhaustedError(ExpmodError, ArithmeticError):
    """Precision doubling failed to stabilise a computed value."""

    def __init__(self, message, first_failing_n=None):
        super().__init__(message)
        self.first_failing_n = first_failing_n


class SingularityError(ExpmodError, ValueError):
    """The scaling exponent is undefined at this mutation probability."""


class SignError(ExpmodError, ValueError):
    """A logarithmic fit met a non-positive value."""

    def __init__(self, message, n=None):
        super().__init__(message)
        self.n = n


class InfeasibleError(ExpmodError, ValueError):
    """A fixed-point equation has no solution in the requested interval."""
