"""Exception types shared across the package."""


class UavMetaError(Exception):
    """Base class for all package errors."""


class DomainError(UavMetaError, ValueError):
    """An argument lies outside the domain of the function."""


class UndefinedConditionalError(DomainError):
    """A conditional quantity was requested on a zero-probability event."""


class UnsupportedMethodError(UavMetaError, ValueError):
    """The requested method does not apply to this configuration."""


class NumericError(UavMetaError, ArithmeticError):
    """A numerical routine failed to reach its tolerance.

    ``where`` carries whatever diagnostic context the raising routine has
    (worst panel, offending term, bracket).
    """

    def __init__(self, message, where=None):
        super().__init__(message)
        self.where = where


class EmptyNetworkError(UavMetaError):
    """A sampled realization contains no transmitter at all."""


class ConfigError(UavMetaError, ValueError):
    """Invalid or unknown configuration key."""
