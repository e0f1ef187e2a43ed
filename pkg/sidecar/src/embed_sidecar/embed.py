"""Batch encoding of a text table into an embedding-table file.

The output is the scoring pipeline's TSV format: a ``#model <id>``
comment, a ``#dim<TAB><n>`` header, then one ``id<TAB>floats...`` row
per text with ``repr`` floats and unit L2 norm, so files load through
the pipeline's embedding loader byte-for-byte unchanged.  The file is
written to a temporary sibling and renamed into place, so readers never
observe a partial table.
"""

from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .encoders import DEFAULT_MODEL, get_encoder
from .errors import ConfigError, EmptyTextError, EncodingError, TextTableError
from .texts import TextTable

UNIT_NORM_TOL = 1e-6        # matches the pipeline loader's unit tolerance


@dataclass
class EmbedJob:
    """One encoding run: what to encode, with which model, to where."""

    table: TextTable
    output: str
    model: str = DEFAULT_MODEL
    batch_size: int = 64

    def validate(self) -> None:
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if not self.model:
            raise ConfigError("model identifier must be non-empty")
        for id_, text in self.table.items():
            if "\t" in id_ or "\n" in id_:
                raise TextTableError(f"id {id_!r} contains a tab or newline")
            if not text.strip():
                raise EmptyTextError(id_)


def _encode_all(job: EmbedJob, encoder) -> np.ndarray:
    chunks: list[np.ndarray] = []
    for start in range(0, len(job.table), job.batch_size):
        batch = job.table.texts[start:start + job.batch_size]
        out = np.asarray(encoder.encode_batch(batch), dtype=np.float64)
        if out.shape != (len(batch), encoder.dim):
            raise EncodingError(
                f"encoder returned shape {out.shape}, "
                f"expected {(len(batch), encoder.dim)}")
        if not np.all(np.isfinite(out)):
            raise EncodingError("encoder returned non-finite values")
        chunks.append(out)
    matrix = np.vstack(chunks) if chunks else np.empty((0, encoder.dim))
    norms = np.linalg.norm(matrix, axis=1)
    zero = np.nonzero(norms == 0.0)[0]
    if zero.size:
        raise EncodingError(
            f"encoder returned a zero vector for id "
            f"{job.table.ids[int(zero[0])]!r}")
    # renormalizing an already-unit row would perturb its bits, so only
    # fix rows with real drift (same rule as the pipeline loader)
    drifted = np.abs(norms - 1.0) > UNIT_NORM_TOL
    if np.any(drifted):
        matrix = matrix.copy()
        matrix[drifted] /= norms[drifted, None]
    return matrix


def embed_texts(job: EmbedJob, encoder=None) -> Path:
    """Encode every text and write the embedding table atomically.

    Returns the output path.  An explicit ``encoder`` bypasses model
    resolution (used for injecting test doubles); otherwise the job's
    model identifier is resolved, raising ``ModelLoadFailure`` when the
    backing weights are unavailable.
    """
    job.validate()
    encoder = encoder if encoder is not None else get_encoder(job.model)
    matrix = _encode_all(job, encoder)

    out_path = Path(job.output)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=out_path.parent,
                                    prefix=out_path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(f"#model {encoder.model_id}\n")
            fh.write(f"#dim\t{encoder.dim}\n")
            for i, id_ in enumerate(job.table.ids):
                floats = "\t".join(repr(float(v)) for v in matrix[i])
                fh.write(f"{id_}\t{floats}\n")
        os.replace(tmp_name, out_path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    return out_path
