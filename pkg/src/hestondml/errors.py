"""Exception types shared across the package."""


class DomainError(ValueError):
    """Inputs are outside the region where a formula is defined or stable."""


class IntegrationError(RuntimeError):
    """Numerical integration failed to converge to the requested tolerance.

    Carries the achieved residual so callers can decide whether to retry
    with a wider truncation bound or looser tolerance.
    """

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class TrainingDivergence(RuntimeError):
    """Training loss became non-finite (exploding gradients)."""
