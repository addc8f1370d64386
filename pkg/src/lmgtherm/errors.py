"""Exception types raised across the package."""


class DomainError(ValueError):
    """An input lies outside the domain of an operation."""


class ResourceError(RuntimeError):
    """A request would exceed a configured resource cap (e.g. Hilbert-space size)."""


class ConvergenceError(RuntimeError):
    """A numerical procedure failed to reach its tolerance."""

    def __init__(self, message: str, last_delta: float | None = None):
        super().__init__(message)
        self.last_delta = last_delta
