"""Exception hierarchy shared by all modules."""


class NormRMTError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(NormRMTError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class UnsupportedError(NormRMTError, NotImplementedError):
    """Requested case is deliberately not implemented (order, symmetry, family)."""


class ConvergenceError(NormRMTError, ArithmeticError):
    """A numerical procedure exhausted its budget.

    The best available estimate is kept in ``estimate`` so callers can decide
    whether it is still usable.
    """

    def __init__(self, message, estimate=None, error=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class DivergenceError(NormRMTError, ArithmeticError):
    """An integral or series does not converge (e.g. a moment that does not exist)."""


class NonNormalizableError(DivergenceError):
    """A density cannot be normalized for the given symmetry class and dimension."""


class PointMassError(NormRMTError, ValueError):
    """A measure with a point mass was evaluated as if it were a function."""


class UnavailableError(NormRMTError, LookupError):
    """No closed-form object (e.g. a spread function) exists for this family."""


class DegenerateFieldError(DomainError):
    """External field entries are (nearly) degenerate for a closed-form kernel."""


class BoundaryTermError(NormRMTError, ArithmeticError):
    """A superspace integrand does not decay, so a boundary term at infinity survives."""
