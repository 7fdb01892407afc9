"""Exception types shared across the package."""


class RachError(Exception):
    """Base class for all package errors."""


class DomainError(RachError, ValueError):
    """An argument lies outside the domain where a formula is meaningful."""


class InfeasibleError(RachError):
    """No contention parameters satisfy the resource constraint."""


class CapExceededError(RachError):
    """Exact enumeration would exceed the configured outcome cap."""

    def __init__(self, n: int, M: int, outcomes: int, cap: int):
        self.n, self.M, self.outcomes, self.cap = n, M, outcomes, cap
        super().__init__(
            f"enumeration of (n={n}, M={M}) needs {outcomes} outcomes, cap is {cap}"
        )


class InconsistentObservationError(RachError, ValueError):
    """An observed channel split does not match the round's preamble count."""


class NonTerminationError(RachError):
    """A burst did not resolve within the round cap."""


class ConfigError(RachError, ValueError):
    """Invalid or unknown configuration keys."""
