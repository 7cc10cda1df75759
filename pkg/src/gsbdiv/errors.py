"""Exception hierarchy shared across the package."""


class GsbError(Exception):
    """Base class for all package errors."""


class DomainError(GsbError):
    """An argument lies outside the mathematical domain of an operation."""


class TruncationError(GsbError):
    """Support truncation could not reach the requested tail tolerance."""


class EstimationError(GsbError):
    """The minimizer failed to locate an interior estimate."""


class SingularMatrixError(GsbError):
    """A required matrix is singular or too ill-conditioned to invert."""

    def __init__(self, message, condition_number=None):
        super().__init__(message)
        self.condition_number = condition_number


class InputError(GsbError):
    """Malformed user input (files, configs, parameter strings)."""
