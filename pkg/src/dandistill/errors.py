"""Exception types shared across the toolkit."""


class DandistillError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(DandistillError):
    """Invalid configuration value (bad n-gram range, zero top-k, ...)."""


class EmptyCorpusError(DandistillError):
    """The document stream produced no n-grams at all."""


class IntegrityError(DandistillError):
    """A binary file is corrupted or truncated.

    Carries the byte offset at which the problem was detected.
    """

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class VersionError(DandistillError):
    """A binary file was written with an unsupported format version."""


class StructuralError(DandistillError):
    """Shapes or id spaces do not line up (vocab/model built under different sizes)."""


class DataValidationError(DandistillError):
    """A dataset record violates the JSONL schema; carries the line number."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
