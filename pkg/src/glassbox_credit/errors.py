"""Exception types shared across the toolkit.

Exit-code mapping in the CLI: usage errors -> 1, DataError -> 2,
ConvergenceError / numerical failures -> 3.
"""


class GlassboxError(Exception):
    """Base class for all toolkit errors."""


class DataError(GlassboxError):
    """Bad or inconsistent input data (missing columns, empty splits, ...)."""


class ConvergenceError(GlassboxError):
    """An iterative solver failed to converge within its iteration budget."""

    def __init__(self, message, iterations=None, grad_norm=None):
        super().__init__(message)
        self.iterations = iterations
        self.grad_norm = grad_norm


class ModelFormatError(GlassboxError):
    """A persisted model file is unreadable, unversioned, or malformed."""
