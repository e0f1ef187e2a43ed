"""Embedding tables and the vector math used by every depth computation.

File format (UTF-8 TSV):
    #dim<TAB><integer>
    <id><TAB><float> ... <float>      (exactly dim floats per row)
Additional ``#``-prefixed lines are treated as comments and skipped.
Floats are written with ``repr`` so load -> save -> load is bit-exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmbeddingFormatError, IdSetMismatchError, MissingEmbeddingError

UNIT_NORM_TOL = 1e-6


@dataclass
class EmbeddingTable:
    dim: int
    ids: list[str]
    matrix: np.ndarray          # shape (len(ids), dim), float64, rows unit-norm
    kind: str = "semantic"      # semantic | structural | fused
    index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        self.index = {i: k for k, i in enumerate(self.ids)}
        if self.matrix.shape != (len(self.ids), self.dim):
            raise ValueError("matrix shape does not match ids/dim")

    def __len__(self) -> int:
        return len(self.ids)

    def __contains__(self, id_: str) -> bool:
        return id_ in self.index

    def vector(self, id_: str) -> np.ndarray:
        try:
            return self.matrix[self.index[id_]]
        except KeyError:
            raise MissingEmbeddingError([id_]) from None

    def vectors(self, ids) -> np.ndarray:
        missing = [i for i in ids if i not in self.index]
        if missing:
            raise MissingEmbeddingError(missing)
        rows = [self.index[i] for i in ids]
        return self.matrix[rows]

    def subset(self, ids, kind: str | None = None) -> "EmbeddingTable":
        ids = list(ids)
        return EmbeddingTable(self.dim, ids, self.vectors(ids).copy(),
                              kind or self.kind)

    def rename(self, mapping: dict[str, str]) -> "EmbeddingTable":
        """New table with ids passed through ``mapping`` (identity if absent)."""
        new_ids = [mapping.get(i, i) for i in self.ids]
        if len(set(new_ids)) != len(new_ids):
            raise EmbeddingFormatError("rename would create duplicate ids")
        return EmbeddingTable(self.dim, new_ids, self.matrix.copy(), self.kind)


def normalize_rows(matrix: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    if np.any(norms == 0):
        raise EmbeddingFormatError("cannot normalize a zero vector")
    return matrix / norms


def make_table(vectors: dict[str, np.ndarray], kind: str = "semantic") -> EmbeddingTable:
    """Build a table from an id -> vector map, renormalizing rows."""
    if not vectors:
        raise EmbeddingFormatError("empty embedding table")
    ids = list(vectors)
    rows = [np.asarray(vectors[i], dtype=np.float64) for i in ids]
    lengths = {r.shape[0] for r in rows}
    if len(lengths) != 1:
        raise EmbeddingFormatError(f"inconsistent vector lengths: {sorted(lengths)}")
    matrix = np.vstack(rows)
    return EmbeddingTable(matrix.shape[1], ids, normalize_rows(matrix), kind)


def load_embeddings(path: str, kind: str = "semantic") -> EmbeddingTable:
    """Load a table; every vector is renormalized to unit L2 norm."""
    dim: int | None = None
    ids: list[str] = []
    rows: list[np.ndarray] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                if line.startswith("#dim\t"):
                    dim = int(line.split("\t")[1])
                continue
            if dim is None:
                raise EmbeddingFormatError("missing '#dim' header before data rows")
            cells = line.split("\t")
            id_, values = cells[0], cells[1:]
            if id_ in seen:
                raise EmbeddingFormatError(f"duplicate id {id_!r} at line {line_no}")
            if len(values) != dim:
                raise EmbeddingFormatError(
                    f"dimension mismatch for {id_!r}: found {len(values)}, expected {dim}")
            vec = np.array([float(v) for v in values], dtype=np.float64)
            norm = np.linalg.norm(vec)
            if norm == 0.0:
                raise EmbeddingFormatError(f"zero vector for id {id_!r}")
            seen.add(id_)
            ids.append(id_)
            # renormalizing an already-unit row would perturb its bits and
            # break load -> save -> load stability, so only fix real drift
            rows.append(vec if abs(norm - 1.0) <= UNIT_NORM_TOL else vec / norm)
    if dim is None:
        raise EmbeddingFormatError("missing '#dim' header")
    matrix = np.vstack(rows) if rows else np.empty((0, dim))
    return EmbeddingTable(dim, ids, matrix, kind)


def save_embeddings(table: EmbeddingTable, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"#dim\t{table.dim}\n")
        for i, id_ in enumerate(table.ids):
            floats = "\t".join(repr(float(v)) for v in table.matrix[i])
            fh.write(f"{id_}\t{floats}\n")


def cosine_similarity(u: np.ndarray, v: np.ndarray) -> float:
    """Standard cosine, clipped into [-1, 1] against rounding overshoot."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise EmbeddingFormatError("cosine of a zero vector is undefined")
    c = float(np.dot(u, v) / (nu * nv))
    return max(-1.0, min(1.0, c))


def clamp_similarity(s: float) -> float:
    """Map a cosine onto [0, 1] by clipping negatives to zero.

    The depth transforms 1 - S assume S in [0, 1]; encoder cosines are
    rarely negative, so clipping keeps scores interpretable without
    distorting typical values.
    """
    return s if s > 0.0 else 0.0


def fuse_embeddings(structural: EmbeddingTable,
                    semantic: EmbeddingTable) -> EmbeddingTable:
    """Concatenate unit-normalized structural and semantic halves.

    Each half is renormalized before concatenation and the concatenated
    vector renormalized after, so for equal-dimension halves the fused
    cosine is the mean of the two per-half cosines.
    """
    s_ids, t_ids = set(structural.ids), set(semantic.ids)
    if s_ids != t_ids:
        raise IdSetMismatchError(t_ids - s_ids, s_ids - t_ids)
    ids = sorted(s_ids)
    left = normalize_rows(structural.vectors(ids))
    right = normalize_rows(semantic.vectors(ids))
    fused = normalize_rows(np.hstack([left, right]))
    return EmbeddingTable(structural.dim + semantic.dim, ids, fused, "fused")
