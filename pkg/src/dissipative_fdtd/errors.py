"""Exception hierarchy."""


class FDTDError(Exception):
    """Base class for all package errors."""


class ConfigurationError(FDTDError, ValueError):
    """Inconsistent dimensions, placements or scenario settings."""


class MaterialError(FDTDError, ValueError):
    """Non-physical material coefficients."""


class StateError(FDTDError, ValueError):
    """Field state that does not match what an operation needs."""


class ConvergenceError(FDTDError, RuntimeError):
    """An iterative method stopped before reaching its tolerance.

    Attributes
    ----------
    iterations : int
    residual : float
        Relative residual of the last iterate.
    estimate : float
        Last value of the quantity being computed.
    """

    def __init__(self, message, iterations, residual, estimate):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual
        self.estimate = estimate


class InstabilityError(FDTDError, RuntimeError):
    """A running simulation produced non-finite or runaway fields."""
