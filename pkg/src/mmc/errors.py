"""Exception types shared across the package."""


class MmcError(Exception):
    """Base class for all package-specific errors."""


class DimensionError(MmcError, ValueError):
    """Shapes or indices are inconsistent with the declared matrix size."""


class DataError(MmcError, ValueError):
    """Input data violates a structural invariant (duplicates, bad signs, ...)."""


class ParseError(MmcError, ValueError):
    """A text input could not be parsed; carries the offending line number."""

    def __init__(self, message, line_number=None):
        super().__init__(message)
        self.line_number = line_number


class NumericalError(MmcError, RuntimeError):
    """An iterative routine produced non-finite values or diverged.

    When raised from the solver, ``trace`` holds the partial fit trace.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace
