"""Exception hierarchy shared across the sidecar.

Base classes map onto the CLI exit codes: configuration problems
(exit 1), bad input data (exit 2), and unavailable or misbehaving
encoders/extractors (exit 3).
"""


class SidecarError(Exception):
    """Base class for all sidecar errors; carries the CLI exit code."""

    exit_code = 2


class ConfigError(SidecarError):
    """Invalid option value or unusable job setup."""

    exit_code = 1


class TextTableError(SidecarError):
    """Input text table violates its contract (duplicates, bad rows)."""

    exit_code = 2


class EmptyTextError(TextTableError):
    """A text is empty after trimming, so it cannot be encoded."""

    def __init__(self, text_id: str):
        self.text_id = text_id
        super().__init__(f"empty text for id {text_id!r}")


class ModelLoadFailure(SidecarError):
    """The requested sentence encoder cannot be loaded locally."""

    exit_code = 3

    def __init__(self, model_id: str, cause: object = None):
        self.model_id = model_id
        detail = f": {cause}" if cause is not None else ""
        super().__init__(f"cannot load sentence encoder {model_id!r}{detail}")


class EncodingError(SidecarError):
    """An encoder returned output violating its contract (shape, NaN, zero)."""

    exit_code = 3


class ExtractorUnavailable(SidecarError):
    """The requested topic extractor is not configured or installed."""

    exit_code = 3

    def __init__(self, name: str):
        self.name = name
        super().__init__(f"topic extractor {name!r} is unavailable")
