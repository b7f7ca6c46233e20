"""Exception types raised across the package."""


class OffloadError(Exception):
    """Base class for all package errors."""


class InstabilityError(OffloadError):
    """Arrival rate is not below the average service rate."""


class ConvergenceError(OffloadError):
    """Truncation hit the hard cap before the tail mass tolerance was met."""


class DomainError(OffloadError, ValueError):
    """Argument outside the domain where the quantity is defined."""


class SingularSystemError(OffloadError):
    """A linear system that should be nonsingular was not."""


class ConfigError(OffloadError, ValueError):
    """Invalid simulation or scenario configuration."""
