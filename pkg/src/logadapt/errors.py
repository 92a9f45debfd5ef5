"""Exception types shared across the pipeline.

Grouped by the CLI's exit-code convention: ConfigError maps to exit 2,
data/format errors to exit 3, and sampling infeasibility to exit 4.
"""


class LogAdaptError(Exception):
    """Base class for all package errors."""


class ConfigError(LogAdaptError):
    """Invalid or inconsistent run configuration."""


class MalformedLine(LogAdaptError):
    """A raw log line does not carry the fixed field prefix."""


class SchemaError(LogAdaptError):
    """A canonical record is missing a required field or has a bad type."""


class FormatError(LogAdaptError):
    """A binary artifact has a bad magic, version, or structure."""


class DimMismatch(LogAdaptError):
    """Embedding table dimension differs from the configured dimension."""


class MissingEmbedding(LogAdaptError):
    """Table provider has no entry for a text and fallback is disabled."""


class ShapeMismatch(LogAdaptError):
    """Tensor shapes are inconsistent with the model configuration."""


class InvalidWindowSize(LogAdaptError):
    """Window size below 1."""


class LengthMismatch(LogAdaptError):
    """Prediction and truth vectors differ in length."""


class NoTasks(LogAdaptError):
    """Meta-training invoked with an empty task list."""


class InfeasibleRate(LogAdaptError):
    """Anomaly rate and cluster bounds cannot be realized for the corpus size."""


class ExhaustedAttempts(LogAdaptError):
    """Rejection sampling failed to find a satisfying split.

    Carries the attempt count and a histogram of the anomaly fractions
    observed on rejected candidates (fraction rounded to 4 decimals).
    """

    def __init__(self, message: str, attempts: int = 0, fraction_histogram: dict | None = None):
        super().__init__(message)
        self.attempts = attempts
        self.fraction_histogram = dict(fraction_histogram or {})
