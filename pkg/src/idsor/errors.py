"""Exception hierarchy shared by all modules."""


class IdsorError(Exception):
    """Base class for every error raised by this package."""


class FormatError(IdsorError):
    """A file does not follow the expected binary or text layout."""


class ValidationError(IdsorError):
    """Point data failed ingestion checks (non-finite values, negative intensity)."""


class AlignmentError(IdsorError):
    """Two per-point structures disagree on the number of points."""


class ConfigError(IdsorError):
    """Invalid or unknown filter/run configuration."""


class FitError(IdsorError):
    """Range samples cannot support a Gamma fit."""
