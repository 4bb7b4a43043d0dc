"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid experiment or scenario configuration."""


class NumericalError(ArithmeticError):
    """A numerical operation failed (non-positive-definite covariance, ...)."""
