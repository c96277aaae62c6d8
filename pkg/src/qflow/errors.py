"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the function."""


class RangeError(OverflowError):
    """A result is too large to be represented in double precision."""


class ConvergenceError(RuntimeError):
    """An iterative method failed to converge.

    ``estimate`` and ``error`` carry the last iterate and its error bound
    (when one exists) so callers can decide whether to accept it.
    """

    def __init__(self, message, estimate=None, error=None, iterations=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error
        self.iterations = iterations


class TruncationError(ConvergenceError):
    """A truncated modal sum has not converged to the requested accuracy."""


class HermiticityError(ValueError):
    """A matrix that should be Hermitian is not."""
