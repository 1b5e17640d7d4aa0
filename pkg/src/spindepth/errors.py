"""Exception hierarchy shared across the package."""


class SpinDepthError(Exception):
    """Base class for all package-specific errors."""


class DataError(SpinDepthError):
    """Malformed or insufficient input data (shot files, sample sizes)."""


class ConfigError(SpinDepthError):
    """Invalid analysis configuration."""


class NumericalError(SpinDepthError):
    """A numerical routine failed to converge or produced an unusable result."""
