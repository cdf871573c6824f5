"""Exception types shared across the package."""


class DelayFluxError(Exception):
    """Base class for all package errors."""


class ParameterError(DelayFluxError, ValueError):
    """A parameter, configuration value, or input datum violates its domain."""


class NumericalError(DelayFluxError, RuntimeError):
    """A solver or iteration failed numerically (non-finite values, broken ordering, ...)."""
