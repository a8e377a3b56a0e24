"""Exception hierarchy.

Three branches map onto the CLI exit codes: ConfigError -> 3,
ProviderError -> 2, DataError (and anything else under RefineError) -> 1.
"""
from __future__ import annotations


class RefineError(Exception):
    """Base class for all package errors."""


class ConfigError(RefineError):
    """Malformed or inconsistent run configuration."""


class InvalidCoefficients(ConfigError):
    """Fusion weights off the probability simplex."""


class InvalidStep(ConfigError):
    """Grid step whose reciprocal is not an integer."""


class DataError(RefineError):
    """Bad or missing input data."""


class EmptyCandidateSet(DataError):
    """A sample arrived with zero raw predictions."""


class ParseError(DataError):
    """A data file failed schema validation; carries path and line number."""

    def __init__(self, path, line, message):
        super().__init__(f"{path}:{line}: {message}")
        self.path = str(path)
        self.line = line


class EmptyValidation(DataError):
    """Scaling-factor fit requested on an empty validation run."""


class MissingSample(DataError):
    """Selections do not cover every referenced sample."""

    def __init__(self, method, sample_ids):
        ids = ", ".join(sorted(sample_ids))
        super().__init__(f"method {method!r} is missing selections for: {ids}")
        self.method = method
        self.sample_ids = tuple(sorted(sample_ids))


class ZeroVector(DataError):
    """Cosine distance requested against a zero-norm embedding."""


class ProviderError(RefineError):
    """Embedding or entailment backend failure."""


class MissingEmbedding(ProviderError):
    """No embedding available for a requested text."""


class MissingEntailment(ProviderError):
    """No entailment probability available for a requested pair."""


class BackendUnavailable(ProviderError):
    """Remote backend still failing after bounded retries."""


class DimensionMismatch(ProviderError):
    """Embedding vectors disagree on dimension."""


class RangeViolation(ProviderError):
    """Backend returned a value outside its contractual range."""
