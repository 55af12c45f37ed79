"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Raised when a parameter combination cannot be honoured."""


class DomainError(ValueError):
    """Raised when an input lies outside the domain of a map."""


class EmptySampleError(RuntimeError):
    """Raised when a sampler has no positive mass to draw from."""
