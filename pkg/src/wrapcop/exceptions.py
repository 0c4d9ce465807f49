"""Exception hierarchy shared by all modules."""


class WrapcopError(Exception):
    """Base class of every error raised by the package."""


class InvalidParameterError(WrapcopError, ValueError):
    """A generator or model parameter lies outside its domain."""


class DomainError(WrapcopError, ValueError):
    """An evaluation point or argument lies outside the supported range."""


class ShapeError(WrapcopError, ValueError):
    """An array argument has the wrong shape or dimension."""


class BoundaryError(DomainError):
    """An evaluation point sits on a boundary where the quantity is undefined."""


class UnsupportedDimensionError(WrapcopError, ValueError):
    """The requested dimension exceeds a computational cost guard."""


class UnsupportedInputError(WrapcopError, ValueError):
    """The input object does not carry the information the operation needs."""


class DegenerateMarginError(WrapcopError, ValueError):
    """A data column is constant, so ranks carry no information."""


class NumericError(WrapcopError, ArithmeticError):
    """A numerical routine failed to reach its tolerance.

    Parameters
    ----------
    message : str
        Human readable description.
    achieved : float, optional
        The error estimate actually reached, when available.
    """

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class SingularGeneratorError(NumericError):
    """The generator density is unbounded on a quadrature grid."""


class DataError(WrapcopError, ValueError):
    """Input data could not be parsed or violates the expected schema."""


class SchemaError(DataError):
    """A table has too few columns or the requested columns are missing."""


class TiesWarning(UserWarning):
    """Tied observations were found where a procedure assumes none."""


class BoundaryWarning(UserWarning):
    """An optimiser stopped at the edge of the reparameterised space."""
