"""Custom exceptions for the package."""


class TeleportNoiseError(Exception):
    """Base exception for all package errors."""
    pass


class DimensionError(TeleportNoiseError):
    """Raised when a Kraus operator, PTM or check matrix has the wrong shape."""
    pass


class NumericConsistencyError(TeleportNoiseError):
    """Raised when a computed quantity violates a structural identity."""
    pass


class DomainError(TeleportNoiseError):
    """Raised when an argument lies outside its mathematical domain."""
    pass


class NoRealRootError(DomainError):
    """Raised when a per-slot probability needs an even root of a negative number."""
    pass


class PreconditionError(TeleportNoiseError):
    """Raised when a bound is requested outside the regime where it holds."""
    pass


class SingularityError(TeleportNoiseError):
    """Raised when a ratio needs a zero PTM diagonal entry."""
    pass


class ResourceLimitError(TeleportNoiseError):
    """Raised when an enumeration would exceed its configured cap."""
    pass


class PurityViolationError(TeleportNoiseError):
    """Raised when a channel is not purely Z-coherent."""
    pass


class InputValidationError(TeleportNoiseError):
    """Raised when configuration content is malformed."""
    pass


class ConfigurationError(TeleportNoiseError):
    """Raised when configuration is invalid."""
    pass
