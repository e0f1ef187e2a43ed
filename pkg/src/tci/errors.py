"""Exception hierarchy shared across the pipeline.

Three base classes map onto the CLI exit codes: configuration problems
(exit 1), bad or inconsistent input data (exit 2), and numerical
failures such as NaN/Inf appearing mid-run (exit 3).
"""


class TciError(Exception):
    """Base class for all package errors; carries the CLI exit code.

    Pipeline stages may attach a ``stage`` attribute for context.
    """

    exit_code = 2
    stage: str | None = None


class ConfigError(TciError):
    """Invalid configuration value or unusable run setup."""

    exit_code = 1


class DataError(TciError):
    """Input data violates a contract (missing fields, bad codes, ...)."""

    exit_code = 2


class NumericalError(TciError):
    """A computation produced NaN/Inf or an otherwise unusable result."""

    exit_code = 3


class MissingIpcTextError(DataError):
    """IPC codes referenced by records lack entries in the text table."""

    def __init__(self, codes):
        self.codes = sorted(codes)
        super().__init__(f"missing IPC text for codes: {', '.join(self.codes)}")


class EmbeddingFormatError(DataError):
    """Embedding table file violates the documented format."""


class IdSetMismatchError(DataError):
    """Two embedding tables do not cover the same id set."""

    def __init__(self, missing_in_structural, missing_in_semantic):
        self.missing_in_structural = sorted(missing_in_structural)
        self.missing_in_semantic = sorted(missing_in_semantic)
        parts = []
        if self.missing_in_structural:
            parts.append(f"absent from structural: {self.missing_in_structural[:5]}")
        if self.missing_in_semantic:
            parts.append(f"absent from semantic: {self.missing_in_semantic[:5]}")
        super().__init__("id set mismatch; " + "; ".join(parts))


class MissingEmbeddingError(DataError):
    """A required id has no vector in the embedding table."""

    def __init__(self, ids):
        self.ids = sorted(ids)
        super().__init__(f"no embedding for: {', '.join(self.ids[:10])}")
