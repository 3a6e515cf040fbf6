"""Exception types raised by the solver."""


class SogpeError(Exception):
    """Base class for all solver errors."""


class ConfigurationError(SogpeError, ValueError):
    """Invalid mesh, physics or run configuration."""


class SpaceMismatch(SogpeError, ValueError):
    """Two objects live on different finite element spaces."""


class SingularMatrix(SogpeError):
    """A sparse factorization hit a (numerically) zero pivot."""

    def __init__(self, message, pivot=0.0):
        super().__init__(message)
        self.pivot = pivot


class LinearSolveError(SogpeError):
    """A solve failed its backward-error check."""


class ShiftOnSpectrum(SogpeError):
    """The spectral shift is (numerically) an eigenvalue of the J-operator."""

    def __init__(self, message, sigma):
        super().__init__(message)
        self.sigma = sigma


class NotNormalized(SogpeError, ValueError):
    """An operation requiring unit mass got a state off the manifold."""


class IterationAbort(SogpeError):
    """An iteration was aborted; ``history`` holds the records so far."""

    def __init__(self, message, history=None, state=None):
        super().__init__(message)
        self.history = history if history is not None else []
        self.state = state
