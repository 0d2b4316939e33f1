"""Exception hierarchy shared by all dampflow modules."""


class DampflowError(Exception):
    """Base class; the CLI maps every subclass to a nonzero exit code."""

    code = "error"


class DimensionMismatch(DampflowError, ValueError):
    code = "dimension_mismatch"


class NotDiagonalizable(DampflowError):
    """Raised for defective (Jordan-form) superoperators."""

    code = "not_diagonalizable"


class SingularMap(DampflowError):
    """A map eigenvalue reached zero, so no time-local generator exists."""

    code = "singular_map"

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class ContourFailure(DampflowError):
    code = "contour_failure"


class PreconditionViolated(DampflowError, ValueError):
    code = "precondition_violated"


class UnknownModel(DampflowError, KeyError):
    code = "unknown_model"

    def __str__(self):
        return str(self.args[0]) if self.args else "unknown model"
