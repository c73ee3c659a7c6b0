"""Exception types shared across the package."""


class InkError(Exception):
    """Base class for all inksig errors."""


class InvalidInputError(InkError, ValueError):
    """An operation received structurally invalid data."""


class ParseError(InkError):
    """A byte stream or file violates its declared format."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class ConfigError(InkError):
    """A run configuration is unusable (empty stream, bad split, ...)."""
