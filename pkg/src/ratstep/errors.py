"""Exception types shared across the package."""


class RatstepError(Exception):
    """Base class for all package-specific errors."""


class ConfigurationError(RatstepError):
    """Invalid user-supplied configuration or arguments."""


class DomainError(RatstepError):
    """Evaluation outside a function's domain (pole hit, pole at the origin)."""


class SolverError(RatstepError):
    """Iterative solver failed to reach the requested tolerance."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class BreakdownError(SolverError):
    """Krylov recurrence broke down (vanishing pivot)."""


class ContractViolation(RatstepError):
    """An internal invariant was violated; indicates a bug, not bad input."""
