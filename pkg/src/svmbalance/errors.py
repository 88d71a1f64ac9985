"""Exception types shared across the package."""


class SvmBalanceError(Exception):
    """Base class for all package-specific errors."""


class DataValidationError(SvmBalanceError):
    """Raised when an ingested dataset violates its invariants."""


class SolverError(SvmBalanceError):
    """Raised when a dual solve fails to meet its KKT tolerance in budget."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class PathError(SvmBalanceError):
    """Raised when path following cannot find a consistent next event.

    Carries a diagnostic ``state`` dict (lambda, alpha, status sets) so a
    failed run can be inspected offline.
    """

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state or {}


class InfeasibleCriterionError(SvmBalanceError):
    """Raised when a frontier selection criterion cannot be satisfied."""
