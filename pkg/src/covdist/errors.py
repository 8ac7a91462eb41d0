"""Exception hierarchy shared across the package."""


class CovdistError(Exception):
    """Base class for all package errors."""


class ValidationError(CovdistError, ValueError):
    """Invalid argument or configuration value.

    ``field`` names the offending parameter when one can be identified.
    """

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class FormatError(CovdistError, ValueError):
    """Malformed input file; ``position`` locates the first bad record."""

    def __init__(self, message, position=None):
        if position is not None:
            message = f"{message} (at {position})"
        super().__init__(message)
        self.position = position


class IntegrationError(CovdistError, RuntimeError):
    """Raised when the MD integrator produces non-finite coordinates."""


class OverlapError(CovdistError, RuntimeError):
    """Two particles closer than the overlap threshold."""
