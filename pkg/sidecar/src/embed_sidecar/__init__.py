"""Batch sentence encoder producing embedding-table files.

The sidecar turns IPC descriptions, topic strings, and applicant names
into the unit-norm TSV embedding tables the convergence scoring
pipeline consumes; the two packages share only that file format.
"""

from .embed import EmbedJob, embed_texts
from .encoders import (
    DEFAULT_MODEL,
    HashedNgramEncoder,
    SentenceTransformerEncoder,
    get_encoder,
)
from .errors import (
    ConfigError,
    EmptyTextError,
    EncodingError,
    ExtractorUnavailable,
    ModelLoadFailure,
    SidecarError,
    TextTableError,
)
from .texts import TextTable, gather_corpus_texts, load_text_table, save_text_table
from .topics import extract_topics, load_topics, save_topics

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DEFAULT_MODEL",
    "EmbedJob",
    "EmptyTextError",
    "EncodingError",
    "ExtractorUnavailable",
    "HashedNgramEncoder",
    "ModelLoadFailure",
    "SentenceTransformerEncoder",
    "SidecarError",
    "TextTable",
    "TextTableError",
    "embed_texts",
    "extract_topics",
    "gather_corpus_texts",
    "get_encoder",
    "load_text_table",
    "load_topics",
    "save_text_table",
    "save_topics",
    "__version__",
]
