"""Exception types shared across the package."""


class OneshotError(Exception):
    """Base class for all package-specific errors."""


class DimensionMismatch(OneshotError, ValueError):
    """A point or vector has the wrong dimension for the operation."""


class DomainError(OneshotError, ValueError):
    """A point lies outside the optimization cube, or a parameter is invalid."""


class ConfigError(OneshotError, ValueError):
    """An experiment configuration failed validation."""


class DecodeError(OneshotError, ValueError):
    """An encoded signal is malformed: wrong length or out-of-range field."""


class RootUncovered(OneshotError, RuntimeError):
    """No depth-0 signal arrived at the modal coarse point, so the server
    cannot anchor its gradient recursion."""
