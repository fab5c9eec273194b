"""Exception types raised by ltlab."""


class LtlabError(Exception):
    """Base class for all ltlab errors."""


class DomainError(LtlabError, ValueError):
    """An argument lies outside the domain of the function."""


class UnsupportedDimensionError(LtlabError, ValueError):
    """The requested operation is not available in this dimension."""


class GaugeError(LtlabError, ValueError):
    """A field is in the wrong gauge, or a gauge conversion is undefined."""


class AdmissibilityError(LtlabError, ValueError):
    """A test function does not belong to the class an operation requires."""


class ConvergenceError(LtlabError, RuntimeError):
    """Quadrature did not reach the requested tolerance.

    The best available estimate is attached as ``best`` (a ``QuadResult``).
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best
