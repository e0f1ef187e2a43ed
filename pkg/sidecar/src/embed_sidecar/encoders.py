"""Sentence encoders behind a single two-method protocol.

An encoder exposes ``model_id`` (recorded in the output file), ``dim``,
and ``encode_batch(texts) -> (n, dim) float64 array``.  Two backends:

* ``hashed-ngram-<dim>`` — dependency-free feature hashing of character
  n-grams.  Fully deterministic across platforms and runs, so it backs
  the test suite and offline use.  Similarity is lexical, not semantic.
* any other id — a pretrained sentence-transformers model looked up by
  that id; unavailable weights surface as ``ModelLoadFailure``.
"""

from __future__ import annotations

import hashlib
import re

import numpy as np

from .errors import ConfigError, ModelLoadFailure

DEFAULT_MODEL = "paraphrase-multilingual-MiniLM-L12-v2"

_HASHED_ID = re.compile(r"^hashed-ngram-(\d+)$")
_SIGN_BIT = 1 << 63


def _bucket(gram: str) -> int:
    # stable across processes, unlike the builtin salted hash
    digest = hashlib.blake2b(gram.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big")


class HashedNgramEncoder:
    """Signed feature hashing of character 3-5-grams, unit-normalized.

    Texts are case-folded and whitespace-collapsed, then padded with one
    space on each side so single-character texts still produce a gram.
    """

    def __init__(self, dim: int = 256):
        if dim < 1:
            raise ConfigError(f"hashed encoder dim must be >= 1, got {dim}")
        self.dim = dim
        self.model_id = f"hashed-ngram-{dim}"

    def _encode_one(self, text: str) -> np.ndarray:
        padded = " " + " ".join(text.casefold().split()) + " "
        vec = np.zeros(self.dim)
        for n in (3, 4, 5):
            for start in range(len(padded) - n + 1):
                h = _bucket(padded[start:start + n])
                vec[h % self.dim] += 1.0 if h & _SIGN_BIT else -1.0
        norm = float(np.linalg.norm(vec))
        if norm == 0.0:
            # no grams (blank text) or full sign cancellation
            vec[_bucket(padded) % self.dim] = 1.0
            norm = 1.0
        return vec / norm

    def encode_batch(self, texts) -> np.ndarray:
        if not texts:
            return np.empty((0, self.dim))
        return np.vstack([self._encode_one(t) for t in texts])


class SentenceTransformerEncoder:
    """Pretrained sentence-similarity model, CPU, loaded lazily.

    Any import or weight-resolution problem is reported as
    ``ModelLoadFailure`` so callers can fall back or abort cleanly.
    """

    def __init__(self, model_id: str):
        try:
            from sentence_transformers import SentenceTransformer
        except Exception as exc:
            raise ModelLoadFailure(model_id, exc) from exc
        try:
            self._model = SentenceTransformer(model_id, device="cpu")
            self.dim = int(self._model.get_sentence_embedding_dimension())
        except Exception as exc:
            raise ModelLoadFailure(model_id, exc) from exc
        self.model_id = model_id

    def encode_batch(self, texts) -> np.ndarray:
        if not texts:
            return np.empty((0, self.dim))
        out = self._model.encode(list(texts), convert_to_numpy=True,
                                 show_progress_bar=False)
        return np.asarray(out, dtype=np.float64)


def get_encoder(model_id: str):
    """Resolve a model identifier to an encoder instance."""
    if not model_id:
        raise ConfigError("model identifier must be non-empty")
    m = _HASHED_ID.match(model_id)
    if m:
        return HashedNgramEncoder(int(m.group(1)))
    return SentenceTransformerEncoder(model_id)
