"""Exception types raised across the package."""


class TwinBeamError(Exception):
    """Base class for all package errors."""


class ParameterError(TwinBeamError, ValueError):
    """A physical parameter is outside its admissible range."""


class DomainError(TwinBeamError, ValueError):
    """An operation was evaluated outside the regime where it is defined."""


class ConfigurationError(TwinBeamError, ValueError):
    """Inconsistent simulation / instrument configuration."""


class InsufficientDataError(TwinBeamError, ValueError):
    """Not enough samples for the requested estimate."""
