"""Exception hierarchy shared across the package."""


class ShotPriceError(Exception):
    """Base class for all package-specific errors."""


class DomainError(ShotPriceError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConfigurationError(ShotPriceError, ValueError):
    """Inconsistent or unsupported combination of model parameters."""


class NumericalError(ShotPriceError):
    """A numerical routine failed to reach its accuracy contract."""


class EstimationError(ShotPriceError):
    """Statistical input is degenerate or insufficient for an estimator."""
