"""Patent-level convergence metrics.

Depth metrics measure how far a patent's secondary classifications sit
from its main classification in an embedding space.  Breadth measures
how evenly the classifications spread across categories.  The
co-occurrence network scores capture how tightly a patent's codes are
knit together in the corpus-wide classification graph.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .corpus import CorpusData, PatentRecord
from .embeddings import EmbeddingTable, clamp_similarity, cosine_similarity
from .errors import DataError
from .ipc import LEVELS, truncate_code


def depth1(main_vec: np.ndarray, secondary_vecs: list[np.ndarray]) -> float:
    """1 minus the lowest clamped similarity to the main classification,
    i.e. the distance to the most divergent secondary code.

    No secondaries means nothing diverges from the main code: depth 0.
    """
    if not secondary_vecs:
        return 0.0
    sims = [clamp_similarity(cosine_similarity(main_vec, v))
            for v in secondary_vecs]
    return 1.0 - min(sims)


def depth2(secondary_vecs: list[np.ndarray], k: float = 1.0) -> float:
    """Dispersion among the secondary classifications themselves.

    Pairwise clamped similarities are blended as alpha * mean +
    (1 - alpha) * max with alpha = n / (n + k), where n is the number of
    pairs; k tempers the average for patents with few pairs.  Fewer than
    two secondaries gives depth 0.
    """
    if len(secondary_vecs) < 2:
        return 0.0
    sims = []
    for i in range(len(secondary_vecs)):
        for j in range(i + 1, len(secondary_vecs)):
            sims.append(clamp_similarity(
                cosine_similarity(secondary_vecs[i], secondary_vecs[j])))
    n = len(sims)
    alpha = n / (n + k)
    blended = alpha * (sum(sims) / n) + (1.0 - alpha) * max(sims)
    return 1.0 - blended


def category_proportions(codes: list[str], level: str = "subclass") -> dict[str, float]:
    """Share of a patent's codes falling in each category at a level."""
    if level not in LEVELS:
        raise DataError(f"unknown aggregation level: {level}")
    if not codes:
        return {}
    counts = Counter(truncate_code(c, level) for c in codes)
    total = sum(counts.values())
    return {cat: cnt / total for cat, cnt in sorted(counts.items())}


def breadth_raw(codes: list[str], level: str = "subclass") -> float:
    """Shannon entropy of the category distribution (natural log)."""
    props = category_proportions(codes, level)
    if not props:
        return 0.0
    return float(-sum(p * np.log(p) for p in props.values() if p > 0.0))


def breadth_normalized(raw_values: np.ndarray) -> np.ndarray:
    """Min-max rescale of raw breadth over a corpus; constant -> zeros."""
    raw_values = np.asarray(raw_values, dtype=float)
    lo, hi = raw_values.min(), raw_values.max()
    if hi - lo == 0.0:
        return np.zeros_like(raw_values)
    return (raw_values - lo) / (hi - lo)


def rao_stirling(codes: list[str], table: EmbeddingTable,
                 level: str = "subclass") -> float:
    """Proportion-weighted pairwise distance across categories.

    Categories at the chosen level get the normalized mean vector of
    their member codes; distance is 1 minus the clamped cosine.  The sum
    runs over ordered pairs of distinct categories.
    """
    props = category_proportions(codes, level)
    if len(props) < 2:
        return 0.0
    members: dict[str, list[np.ndarray]] = {}
    for code in codes:
        members.setdefault(truncate_code(code, level), []).append(table.vector(code))
    centroids = {}
    for cat, vecs in members.items():
        mean = np.mean(vecs, axis=0)
        norm = np.linalg.norm(mean)
        centroids[cat] = mean / norm if norm > 0 else mean
    cats = sorted(props)
    total = 0.0
    for ci in cats:
        for cj in cats:
            if ci == cj:
                continue
            sim = clamp_similarity(float(np.dot(centroids[ci], centroids[cj])))
            total += props[ci] * props[cj] * (1.0 - sim)
    return total


@dataclass
class CoocNetwork:
    """Undirected co-classification network over IPC codes.

    Codes are linked when they appear together on at least min_support
    patents.  Shortest paths and clustering coefficients are computed
    once per node and cached.
    """

    nodes: list[str]
    adjacency: dict[str, set[str]] = field(repr=False)
    _dist_cache: dict[str, dict[str, int]] = field(default_factory=dict,
                                                   init=False, repr=False,
                                                   compare=False)
    _clust_cache: dict[str, float] = field(default_factory=dict, init=False,
                                           repr=False, compare=False)

    def degree(self, code: str) -> int:
        return len(self.adjacency.get(code, ()))

    def has_node(self, code: str) -> bool:
        return code in self.adjacency

    def local_clustering(self, code: str) -> float:
        """Fraction of neighbor pairs that are themselves linked."""
        cached = self._clust_cache.get(code)
        if cached is not None:
            return cached
        nbrs = sorted(self.adjacency.get(code, ()))
        k = len(nbrs)
        if k < 2:
            value = 0.0
        else:
            links = 0
            for i in range(k):
                for j in range(i + 1, k):
                    if nbrs[j] in self.adjacency[nbrs[i]]:
                        links += 1
            value = 2.0 * links / (k * (k - 1))
        self._clust_cache[code] = value
        return value

    def shortest_path(self, a: str, b: str) -> float:
        """Hop count between two codes; inf when disconnected."""
        if a not in self.adjacency or b not in self.adjacency:
            return float("inf")
        d = self._bfs_all(a).get(b)
        return float(d) if d is not None else float("inf")

    def diameter(self) -> int:
        """Longest finite shortest path over the network."""
        best = 0
        for a in self.nodes:
            dists = self._bfs_all(a)
            if dists:
                best = max(best, max(dists.values()))
        return best

    def _bfs_all(self, a: str) -> dict[str, int]:
        cached = self._dist_cache.get(a)
        if cached is not None:
            return cached
        dists = {a: 0}
        frontier = [a]
        d = 0
        while frontier:
            d += 1
            nxt = []
            for u in frontier:
                for v in sorted(self.adjacency[u]):
                    if v not in dists:
                        dists[v] = d
                        nxt.append(v)
            frontier = nxt
        self._dist_cache[a] = dists
        return dists


def build_cooc_network(corpus: CorpusData, min_support: int = 1) -> CoocNetwork:
    """Link codes co-appearing on at least min_support patents."""
    if min_support < 1:
        raise DataError("min_support must be >= 1")
    pair_counts: Counter = Counter()
    codes = set()
    for rec in corpus.records:
        cs = sorted(set(rec.all_ipcs()))
        codes.update(cs)
        for i in range(len(cs)):
            for j in range(i + 1, len(cs)):
                pair_counts[(cs[i], cs[j])] += 1
    adjacency: dict[str, set[str]] = {c: set() for c in sorted(codes)}
    for (a, b), cnt in pair_counts.items():
        if cnt >= min_support:
            adjacency[a].add(b)
            adjacency[b].add(a)
    return CoocNetwork(sorted(codes), adjacency)


def clustering_coefficient_score(record: PatentRecord, network: CoocNetwork) -> float:
    """Mean local clustering over the patent's codes.

    Codes absent from the network (or with fewer than two links)
    contribute zero.
    """
    codes = sorted(set(record.all_ipcs()))
    if not codes:
        return 0.0
    vals = [network.local_clustering(c) if network.has_node(c) else 0.0
            for c in codes]
    return float(sum(vals) / len(vals))


def average_distance_score(record: PatentRecord, network: CoocNetwork,
                           penalty: float | None = None) -> float:
    """Mean shortest-path length over unordered pairs of the patent's codes.

    Disconnected pairs count as the penalty (diameter + 1 when not
    given).  Fewer than two distinct codes scores zero.
    """
    codes = sorted(set(record.all_ipcs()))
    if len(codes) < 2:
        return 0.0
    if penalty is None:
        penalty = float(network.diameter() + 1)
    total = 0.0
    count = 0
    for i in range(len(codes)):
        for j in range(i + 1, len(codes)):
            d = network.shortest_path(codes[i], codes[j])
            total += penalty if np.isinf(d) else d
            count += 1
    return total / count


@dataclass
class PatentMetrics:
    """Per-patent raw metric bundle prior to weighting."""

    patent_id: str
    d1_fused: float
    d2_fused: float
    d1_structural: float
    d2_structural: float
    d1_semantic: float
    d2_semantic: float
    breadth: float
    rao_stirling: float
    clustering: float
    distance: float


def compute_patent_metrics(corpus: CorpusData,
                           fused: EmbeddingTable,
                           structural: EmbeddingTable,
                           semantic: EmbeddingTable,
                           network: CoocNetwork,
                           level: str = "subclass",
                           depth_k: float = 1.0,
                           distance_penalty: float | None = None) -> list[PatentMetrics]:
    """Full per-patent metric sweep over a corpus.

    The three embedding tables must each cover every code that appears
    in the corpus.
    """
    if distance_penalty is None:
        distance_penalty = float(network.diameter() + 1)
    out = []
    for rec in corpus.records:
        per_table = {}
        for name, table in (("fused", fused), ("structural", structural),
                            ("semantic", semantic)):
            main = table.vector(rec.main_ipc)
            secs = [table.vector(c) for c in rec.secondary_ipcs]
            per_table[name] = (depth1(main, secs), depth2(secs, k=depth_k))
        out.append(PatentMetrics(
            patent_id=rec.patent_id,
            d1_fused=per_table["fused"][0],
            d2_fused=per_table["fused"][1],
            d1_structural=per_table["structural"][0],
            d2_structural=per_table["structural"][1],
            d1_semantic=per_table["semantic"][0],
            d2_semantic=per_table["semantic"][1],
            breadth=breadth_raw(rec.all_ipcs(), level),
            rao_stirling=rao_stirling(rec.all_ipcs(), fused, level),
            clustering=clustering_coefficient_score(rec, network),
            distance=average_distance_score(rec, network, distance_penalty),
        ))
    return out
