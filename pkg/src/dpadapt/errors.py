"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """Raised when user-supplied data violates a precondition."""


class InvalidParameterError(ValueError):
    """Raised when a configuration parameter is out of range."""


class RankDeficientError(ValueError):
    """Raised when an unregularized linear system is singular."""


class ProxConvergenceError(RuntimeError):
    """Inner prox solver failed to reach tolerance.

    Carries the final duality gap so callers can diagnose or decide
    whether the approximate solution is acceptable.
    """

    def __init__(self, gap: float, iterations: int):
        self.gap = gap
        self.iterations = iterations
        super().__init__(
            f"prox solver did not converge after {iterations} iterations "
            f"(final gap {gap:.3e})"
        )
