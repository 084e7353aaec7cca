"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Bad parameters, families out of range, malformed configs."""


class NumericalError(RuntimeError):
    """A numerical procedure failed (bracket not found, divergence)."""
