"""Entropy-weighted composition of the convergence index and variants.

Component weights come from the entropy weight method: columns carrying
more information (lower entropy across the corpus) get more weight.  The
composite is a convex combination of per-patent depth-1, depth-2, and a
diversity component.  Variants swap embedding routes or the diversity
component to probe robustness.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .metrics import PatentMetrics

VARIANT_NAMES = ("v1", "v2", "v3", "v4", "v5", "v6", "v7", "v8")

_WEIGHT_TIE_EPS = 1e-9


class TooFewRowsError(DataError):
    """Entropy weighting needs at least two observations."""


class MissingComponentError(DataError):
    """A variant was requested without its required component column."""


def minmax_normalize(values: np.ndarray) -> np.ndarray:
    """Rescale to [0, 1]; a constant column collapses to zeros."""
    values = np.asarray(values, dtype=float)
    lo, hi = values.min(), values.max()
    if hi - lo == 0.0:
        return np.zeros_like(values)
    return (values - lo) / (hi - lo)


def entropy_weights(components: np.ndarray) -> np.ndarray:
    """Entropy-method weights for an (N, m) component matrix.

    Each column is min-max normalized, turned into a share distribution
    across observations, and scored by normalized Shannon entropy; the
    weight of a column is proportional to one minus its entropy.  A
    column with zero total (constant after normalization) counts as
    maximally entropic.  If every column degenerates, weights fall back
    to uniform.
    """
    components = np.asarray(components, dtype=float)
    if components.ndim != 2:
        raise DataError("component matrix must be 2-dimensional")
    n, m = components.shape
    if n < 2:
        raise TooFewRowsError("entropy weighting needs at least two rows")
    entropies = np.empty(m)
    for j in range(m):
        col = minmax_normalize(components[:, j])
        total = col.sum()
        if total == 0.0:
            p = np.full(n, 1.0 / n)
        else:
            p = col / total
        nonzero = p[p > 0.0]
        entropies[j] = float(-(nonzero * np.log(nonzero)).sum() / np.log(n))
    divergence = 1.0 - entropies
    denom = divergence.sum()
    if denom <= 0.0:
        return np.full(m, 1.0 / m)
    return divergence / denom


def enforce_weight_constraint(weights: np.ndarray) -> np.ndarray:
    """Keep the first depth component at least as heavy as the second.

    Swaps the first two weights when the second dominates; an exact
    nonzero tie is broken by nudging the first up before renormalizing.
    Expects a weight vector whose first two entries are the depth-1 and
    depth-2 weights.
    """
    weights = np.asarray(weights, dtype=float).copy()
    if weights.size < 2:
        return weights
    if weights[1] > weights[0]:
        weights[[0, 1]] = weights[[1, 0]]
    if weights[0] == weights[1] and weights[0] != 0.0:
        weights[0] += _WEIGHT_TIE_EPS
        weights = weights / weights.sum()
    return weights


def compose_tci(components: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Convex combination of component columns with the given weights."""
    components = np.asarray(components, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if components.shape[1] != weights.size:
        raise DataError("component/weight shape mismatch")
    if not np.isclose(weights.sum(), 1.0, atol=1e-9):
        raise DataError("weights must sum to one")
    return components @ weights


@dataclass
class VariantResult:
    """A variant's per-patent scores plus the weights that produced them."""

    name: str
    scores: np.ndarray
    weights: np.ndarray | None = None


def _column(metrics: list[PatentMetrics], attr: str) -> np.ndarray:
    return np.asarray([getattr(m, attr) for m in metrics], dtype=float)


def _ewm_scores(columns: list[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    mat = np.column_stack(columns)
    w = enforce_weight_constraint(entropy_weights(mat))
    return compose_tci(mat, w), w


def compute_variant(name: str, metrics: list[PatentMetrics],
                    breadth_norm: np.ndarray,
                    rao_norm: np.ndarray) -> VariantResult:
    """One scoring variant over the corpus.

    v1/v2 are the network-only scores; v3/v4 are depth-only composites on
    the semantic and structural routes; v5/v6 add the diversity component
    to those routes; v7 swaps the diversity component for the
    distance-weighted one; v8 is the headline composite on the fused
    route.  All but v8 are min-max normalized for comparability; v8 is
    reported raw since its components already live in [0, 1].
    """
    if name not in VARIANT_NAMES:
        raise MissingComponentError(f"unknown variant: {name}")
    n = len(metrics)
    if n == 0:
        raise DataError("no metrics rows")
    if breadth_norm.shape != (n,) or rao_norm.shape != (n,):
        raise MissingComponentError("component column length mismatch")

    if name == "v1":
        return VariantResult(name, minmax_normalize(_column(metrics, "clustering")))
    if name == "v2":
        return VariantResult(name, minmax_normalize(_column(metrics, "distance")))
    if name == "v3":
        scores, w = _ewm_scores([_column(metrics, "d1_semantic"),
                                 _column(metrics, "d2_semantic")])
        return VariantResult(name, minmax_normalize(scores), w)
    if name == "v4":
        scores, w = _ewm_scores([_column(metrics, "d1_structural"),
                                 _column(metrics, "d2_structural")])
        return VariantResult(name, minmax_normalize(scores), w)
    if name == "v5":
        scores, w = _ewm_scores([_column(metrics, "d1_structural"),
                                 _column(metrics, "d2_structural"),
                                 breadth_norm])
        return VariantResult(name, minmax_normalize(scores), w)
    if name == "v6":
        scores, w = _ewm_scores([_column(metrics, "d1_semantic"),
                                 _column(metrics, "d2_semantic"),
                                 breadth_norm])
        return VariantResult(name, minmax_normalize(scores), w)
    if name == "v7":
        scores, w = _ewm_scores([_column(metrics, "d1_fused"),
                                 _column(metrics, "d2_fused"),
                                 rao_norm])
        return VariantResult(name, minmax_normalize(scores), w)
    # v8: the index itself, raw convex combination
    scores, w = _ewm_scores([_column(metrics, "d1_fused"),
                             _column(metrics, "d2_fused"),
                             breadth_norm])
    return VariantResult(name, scores, w)


@dataclass
class ScoreTable:
    """Final per-patent score block in stable column order."""

    patent_ids: list[str]
    columns: dict[str, np.ndarray]
    weights: dict[str, np.ndarray]

    HEADER = ("patent_id", "D1", "D2", "breadth_raw", "breadth_norm",
              "rao_stirling", "v1", "v2", "v3", "v4", "v5", "v6", "v7", "v8")

    def row(self, i: int) -> list[str]:
        return [self.patent_ids[i]] + [repr(float(self.columns[c][i]))
                                       for c in self.HEADER[1:]]


def assemble_scores(metrics: list[PatentMetrics]) -> ScoreTable:
    """All variants plus the raw component columns for a corpus."""
    if len(metrics) < 2:
        raise TooFewRowsError("scoring needs at least two patents")
    breadth = _column(metrics, "breadth")
    breadth_norm = minmax_normalize(breadth)
    rao = _column(metrics, "rao_stirling")
    rao_norm = minmax_normalize(rao)
    columns: dict[str, np.ndarray] = {
        "D1": _column(metrics, "d1_fused"),
        "D2": _column(metrics, "d2_fused"),
        "breadth_raw": breadth,
        "breadth_norm": breadth_norm,
        "rao_stirling": rao,
    }
    weights: dict[str, np.ndarray] = {}
    for name in VARIANT_NAMES:
        result = compute_variant(name, metrics, breadth_norm, rao_norm)
        columns[name] = result.scores
        if result.weights is not None:
            weights[name] = result.weights
    return ScoreTable([m.patent_id for m in metrics], columns, weights)


def save_scores(table: ScoreTable, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\t".join(table.HEADER) + "\n")
        for i in range(len(table.patent_ids)):
            fh.write("\t".join(table.row(i)) + "\n")


def load_scores(path: str) -> ScoreTable:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split("\t")
        if tuple(header) != ScoreTable.HEADER:
            raise DataError("unexpected score file header")
        ids = []
        cols: dict[str, list[float]] = {c: [] for c in header[1:]}
        for line in fh:
            cells = line.rstrip("\n").split("\t")
            ids.append(cells[0])
            for c, v in zip(header[1:], cells[1:]):
                cols[c].append(float(v))
    return ScoreTable(ids, {c: np.asarray(v) for c, v in cols.items()}, {})
