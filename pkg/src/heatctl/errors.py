"""Exception types raised by heatctl."""


class HeatCtlError(Exception):
    """Base class for all package errors."""


class DomainError(HeatCtlError, ValueError):
    """Invalid domain parameters or inconsistent field representation."""


class EigensolverError(HeatCtlError, ArithmeticError):
    """The tridiagonal eigensolver hit its iteration cap."""


class ConvergenceError(HeatCtlError, ArithmeticError):
    """A truncated series did not meet its cutoff within the term cap."""


class WindowError(HeatCtlError, ValueError):
    """A time argument lies outside the admissible convergence window."""


class CholeskyBreakdown(HeatCtlError, ArithmeticError):
    """Non-positive pivot encountered while factoring a Gram-type matrix."""

    def __init__(self, index: int, pivot: float):
        self.index = index
        self.pivot = pivot
        super().__init__(
            f"Cholesky breakdown at pivot {index}: {pivot:.3e} "
            "(matrix numerically singular at working precision)"
        )


class RouteMismatch(HeatCtlError, ArithmeticError):
    """Two independent evaluation routes disagree beyond tolerance."""
