"""Typed graph over patents, IPC codes, topics, and applicants.

Node and edge ordering is canonical (lexicographic), so building the same
corpus twice, or a shuffled copy of it, yields an identical graph.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .corpus import CorpusData
from .embeddings import EmbeddingTable, clamp_similarity
from .errors import DataError, MissingEmbeddingError

NODE_TYPES = ("Patent", "IPC", "Topic", "Applicant")
RELATIONS = ("ApplicantPatent", "IpcIpc", "PatentIpc", "PatentTopic")

# endpoint type contract per relation: (src_type, dst_type)
RELATION_ENDPOINTS = {
    "PatentIpc": ("Patent", "IPC"),
    "IpcIpc": ("IPC", "IPC"),
    "PatentTopic": ("Patent", "Topic"),
    "ApplicantPatent": ("Applicant", "Patent"),
}


@dataclass(frozen=True, order=True)
class NodeRef:
    node_type: str
    key: str

    @property
    def uid(self) -> str:
        return f"{self.node_type}:{self.key}"


@dataclass(frozen=True, order=True)
class EdgeRef:
    relation: str
    src: NodeRef
    dst: NodeRef
    weight: float = 1.0

    def validate(self) -> None:
        want = RELATION_ENDPOINTS.get(self.relation)
        if want is None:
            raise DataError(f"unknown relation {self.relation!r}")
        if (self.src.node_type, self.dst.node_type) != want:
            raise DataError(
                f"{self.relation} cannot connect {self.src.node_type} -> {self.dst.node_type}")
        if self.src == self.dst:
            raise DataError(f"self-loop on {self.src.uid}")
        if not (0.0 <= self.weight <= 1.0):
            raise DataError(f"edge weight {self.weight} outside [0, 1]")


@dataclass
class GraphConfig:
    knn_k: int = 5
    sim_threshold: float = 0.0

    def validate(self) -> None:
        if self.knn_k < 1 and not (0.0 < self.sim_threshold <= 1.0):
            raise DataError("need knn_k >= 1 or sim_threshold in (0, 1]")


class HeteroGraph:
    """Immutable-after-build typed graph with per-relation adjacency.

    Adjacency treats every edge as traversable in both directions under
    its relation label; lists are kept in canonical (sorted) order.
    """

    def __init__(self, nodes: list[NodeRef], edges: list[EdgeRef]):
        self.nodes = sorted(set(nodes))
        node_set = set(self.nodes)
        seen: set[tuple[str, NodeRef, NodeRef]] = set()
        kept: list[EdgeRef] = []
        for e in sorted(set(edges)):
            e.validate()
            if e.src not in node_set or e.dst not in node_set:
                raise DataError(f"edge endpoint not in node set: {e}")
            trip = (e.relation, e.src, e.dst)
            if trip in seen:
                continue
            seen.add(trip)
            kept.append(e)
        self.edges = kept
        self.adjacency: dict[NodeRef, dict[str, list[tuple[NodeRef, float]]]] = {
            n: {} for n in self.nodes}
        for e in self.edges:
            self.adjacency[e.src].setdefault(e.relation, []).append((e.dst, e.weight))
            self.adjacency[e.dst].setdefault(e.relation, []).append((e.src, e.weight))
        for nbrs in self.adjacency.values():
            for rel in nbrs:
                nbrs[rel] = sorted(nbrs[rel])

    def neighbors(self, node: NodeRef) -> list[tuple[str, NodeRef, float]]:
        """Typed neighborhood in canonical (relation, neighbor) order."""
        out = []
        for rel in sorted(self.adjacency[node]):
            for nbr, w in self.adjacency[node][rel]:
                out.append((rel, nbr, w))
        return out

    def nodes_of_type(self, node_type: str) -> list[NodeRef]:
        return [n for n in self.nodes if n.node_type == node_type]

    def edges_of(self, relation: str) -> list[EdgeRef]:
        return [e for e in self.edges if e.relation == relation]

    def counts(self) -> dict[str, int]:
        c: dict[str, int] = {}
        for n in self.nodes:
            c[n.node_type] = c.get(n.node_type, 0) + 1
        for e in self.edges:
            c[e.relation] = c.get(e.relation, 0) + 1
        return c


def _norm_key(text: str) -> str:
    # topic/applicant identity: trimmed, case-folded, no entity resolution
    return text.strip().casefold()


def build_ipc_ipc_edges(semantic: EmbeddingTable, cfg: GraphConfig,
                        codes: list[str] | None = None) -> list[EdgeRef]:
    """kNN similarity edges among IPC codes over their semantic vectors.

    Each code selects its top-k most cosine-similar peers; an edge exists
    if either endpoint selects the other (symmetrized).  Weights are
    clamped cosines; pairs at or below the threshold are dropped.
    """
    cfg.validate()
    codes = sorted(codes if codes is not None else semantic.ids)
    n = len(codes)
    if n < 2:
        return []
    M = semantic.vectors(codes)          # unit rows
    sims = M @ M.T
    np.fill_diagonal(sims, -np.inf)

    pairs: set[tuple[int, int]] = set()
    k = min(cfg.knn_k, n - 1)
    for i in range(n):
        if k >= 1:
            order = np.argsort(-sims[i], kind="stable")[:k]
            for j in order:
                pairs.add((min(i, int(j)), max(i, int(j))))

    edges = []
    for i, j in sorted(pairs):
        w = clamp_similarity(float(sims[i, j]))
        if w < cfg.sim_threshold:
            continue
        edges.append(EdgeRef("IpcIpc", NodeRef("IPC", codes[i]),
                             NodeRef("IPC", codes[j]), w))
    return edges


def build_graph(corpus: CorpusData, semantic: EmbeddingTable,
                cfg: GraphConfig | None = None) -> HeteroGraph:
    """One Patent node per record, one IPC/Topic/Applicant node per
    distinct key; edges from record fields plus kNN IpcIpc edges."""
    cfg = cfg or GraphConfig()
    nodes: list[NodeRef] = []
    edges: list[EdgeRef] = []

    codes = corpus.distinct_ipcs()
    missing = [c for c in codes if c not in semantic]
    if missing:
        raise MissingEmbeddingError(missing)

    for code in codes:
        nodes.append(NodeRef("IPC", code))

    topic_keys: set[str] = set()
    applicant_keys: set[str] = set()
    for rec in corpus.records:
        p = NodeRef("Patent", rec.patent_id)
        nodes.append(p)
        for code in rec.all_ipcs():
            edges.append(EdgeRef("PatentIpc", p, NodeRef("IPC", code), 1.0))
        for topic in rec.topics:
            key = _norm_key(topic)
            if not key:
                continue
            topic_keys.add(key)
            edges.append(EdgeRef("PatentTopic", p, NodeRef("Topic", key), 1.0))
        for applicant in rec.applicants:
            key = _norm_key(applicant)
            if not key:
                continue
            applicant_keys.add(key)
            edges.append(EdgeRef("ApplicantPatent", NodeRef("Applicant", key), p, 1.0))

    nodes.extend(NodeRef("Topic", k) for k in topic_keys)
    nodes.extend(NodeRef("Applicant", k) for k in applicant_keys)
    edges.extend(build_ipc_ipc_edges(semantic, cfg, codes))
    return HeteroGraph(nodes, edges)


def initial_features(graph: HeteroGraph, semantic: EmbeddingTable) -> EmbeddingTable:
    """Unit-norm starting vectors for every node, keyed by ``type:key``.

    IPC nodes take their semantic vector.  Topic/Applicant nodes take the
    semantic vector of their text when the table has one.  Patent nodes
    average their IPC neighbors; remaining text nodes average their
    patent neighbors, which always exist by construction.
    """
    dim = semantic.dim
    vecs: dict[NodeRef, np.ndarray] = {}

    for node in graph.nodes_of_type("IPC"):
        vecs[node] = semantic.vector(node.key)
    for node_type in ("Topic", "Applicant"):
        for node in graph.nodes_of_type(node_type):
            if node.key in semantic:
                vecs[node] = semantic.vector(node.key)

    def mean_of(neighbors: list[NodeRef]) -> np.ndarray:
        rows = [vecs[n] for n in neighbors if n in vecs]
        if not rows:
            return np.full(dim, 1.0 / np.sqrt(dim))
        m = np.mean(rows, axis=0)
        norm = np.linalg.norm(m)
        return m / norm if norm > 1e-12 else np.full(dim, 1.0 / np.sqrt(dim))

    for node in graph.nodes_of_type("Patent"):
        ipc_nbrs = [n for n, _ in graph.adjacency[node].get("PatentIpc", [])]
        vecs[node] = mean_of(ipc_nbrs)

    for node in graph.nodes:
        if node in vecs:
            continue
        patent_nbrs = [n for rel in graph.adjacency[node]
                       for n, _ in graph.adjacency[node][rel]
                       if n.node_type == "Patent"]
        vecs[node] = mean_of(patent_nbrs)

    ids = [n.uid for n in graph.nodes]
    matrix = np.vstack([vecs[n] for n in graph.nodes]) if ids else np.empty((0, dim))
    return EmbeddingTable(dim, ids, matrix, "semantic")


def save_graph(graph: HeteroGraph, edges_path: str, nodes_path: str) -> None:
    with open(nodes_path, "w", encoding="utf-8") as fh:
        fh.write("node_type\tkey\n")
        for n in graph.nodes:
            fh.write(f"{n.node_type}\t{n.key}\n")
    with open(edges_path, "w", encoding="utf-8") as fh:
        fh.write("relation\tsrc\tdst\tweight\n")
        for e in graph.edges:
            fh.write(f"{e.relation}\t{e.src.uid}\t{e.dst.uid}\t{repr(e.weight)}\n")


def load_graph(edges_path: str, nodes_path: str) -> HeteroGraph:
    nodes: list[NodeRef] = []
    with open(nodes_path, encoding="utf-8") as fh:
        next(fh)
        for line in fh:
            if not line.strip():
                continue
            node_type, key = line.rstrip("\n").split("\t", 1)
            nodes.append(NodeRef(node_type, key))
    edges: list[EdgeRef] = []
    with open(edges_path, encoding="utf-8") as fh:
        next(fh)
        for line in fh:
            if not line.strip():
                continue
            rel, src, dst, w = line.rstrip("\n").split("\t")
            st, sk = src.split(":", 1)
            dt, dk = dst.split(":", 1)
            edges.append(EdgeRef(rel, NodeRef(st, sk), NodeRef(dt, dk), float(w)))
    return HeteroGraph(nodes, edges)
