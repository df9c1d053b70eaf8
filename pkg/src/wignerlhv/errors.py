"""Exception types shared across the package."""


class DegenerateDenominator(ArithmeticError):
    """The normalising sum of a correlation ratio is (numerically) zero."""


class CapacityError(MemoryError):
    """A requested batch or dump is larger than the configured limit."""


class ConfigError(ValueError):
    """Invalid experiment configuration (bad key, value or combination)."""
