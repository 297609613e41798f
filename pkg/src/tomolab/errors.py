"""Exception types shared across the package."""


class TomolabError(Exception):
    """Base class for package-specific errors."""


class InvalidStateError(TomolabError, ValueError):
    """A vector or matrix does not describe a valid qubit state."""


class MlConvergenceError(TomolabError, RuntimeError):
    """The likelihood solver did not reach its tolerance.

    Carries the last iterate and its gradient residual so callers can
    inspect how close the solver got.
    """

    def __init__(self, message, last_iterate, residual, iterations):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.residual = residual
        self.iterations = iterations
