from __future__ import annotations


class DataError(ValueError):
    """Input data (files, manifests, caches) that cannot be used as given."""


class PitchFileError(DataError):
    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


class TonicFileError(DataError):
    pass


class ManifestError(DataError):
    pass


class CacheFormatError(DataError):
    pass


class GrammarError(DataError):
    pass


class ConfigError(DataError):
    pass


class InsufficientTrainingError(RuntimeError):
    """A KNN model has fewer usable training items than neighbours requested."""
