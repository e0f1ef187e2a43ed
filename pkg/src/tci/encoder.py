"""Relation-aware attention message passing and its trainer.

Each layer updates a node by attending over its full typed neighborhood:
the message from neighbor j under relation r is W_r h_j, scored by
a_r . tanh(W_r h_j), with one softmax across all (relation, neighbor)
pairs of the node.  Nodes without neighbors pass through unchanged.
Outputs are renormalized to unit vectors.

Training is link prediction on Patent-IPC edges: logistic loss on dot
products of final-layer embeddings, uniform negative sampling, one
full-batch gradient step per epoch.  Everything is seeded and the
summation order is canonical, so runs are bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .embeddings import EmbeddingTable
from .errors import DataError, NumericalError
from .graph import RELATIONS, HeteroGraph

_NORM_FLOOR = 1e-12


@dataclass
class TrainConfig:
    epochs: int = 100
    learning_rate: float = 0.05
    negatives_per_positive: int = 5
    layers: int = 2
    holdout_fraction: float = 0.1
    seed: int = 0

    def validate(self) -> None:
        if self.epochs < 1:
            raise DataError("epochs must be >= 1")
        if self.learning_rate <= 0:
            raise DataError("learning rate must be positive")
        if self.negatives_per_positive < 1:
            raise DataError("need at least one negative per positive")
        if not (0.0 <= self.holdout_fraction < 1.0):
            raise DataError("holdout fraction must be in [0, 1)")


@dataclass
class EncoderParams:
    relations: tuple[str, ...]
    dims: tuple[int, ...]                      # layer widths, length layers+1
    seed: int
    weights: list[dict[str, np.ndarray]]       # per layer: relation -> (dout, din)
    attention: list[dict[str, np.ndarray]]     # per layer: relation -> (dout,)

    @property
    def layers(self) -> int:
        return len(self.weights)

    def check_finite(self) -> None:
        for lw, la in zip(self.weights, self.attention):
            for rel in lw:
                if not (np.all(np.isfinite(lw[rel])) and np.all(np.isfinite(la[rel]))):
                    raise NumericalError(f"non-finite parameters for relation {rel}")

    def copy(self) -> "EncoderParams":
        return EncoderParams(
            self.relations, self.dims, self.seed,
            [{r: w.copy() for r, w in lw.items()} for lw in self.weights],
            [{r: a.copy() for r, a in la.items()} for la in self.attention],
        )


def init_params(dim: int, layers: int, seed: int,
                relations: tuple[str, ...] = RELATIONS) -> EncoderParams:
    """Xavier-uniform transforms, small-normal attention vectors.

    All layers share the width of the input so the pass-through rule for
    isolated nodes stays shape-consistent.
    """
    rng = np.random.default_rng(seed)
    weights, attention = [], []
    scale = np.sqrt(6.0 / (dim + dim))
    for _ in range(layers):
        lw, la = {}, {}
        for rel in relations:
            lw[rel] = rng.uniform(-scale, scale, size=(dim, dim))
            la[rel] = rng.normal(0.0, 1.0 / np.sqrt(dim), size=dim)
        weights.append(lw)
        attention.append(la)
    return EncoderParams(tuple(relations), tuple([dim] * (layers + 1)), seed,
                         weights, attention)


class GraphTensors:
    """Flattened typed adjacency in canonical order for vectorized passes."""

    def __init__(self, graph: HeteroGraph,
                 drop_edges: set[tuple[str, str, str]] | None = None):
        self.node_uids = [n.uid for n in graph.nodes]
        self.node_pos = {uid: i for i, uid in enumerate(self.node_uids)}
        self.relations = RELATIONS
        rel_pos = {r: i for i, r in enumerate(self.relations)}
        drop = drop_edges or set()

        entry_node, entry_rel, entry_nbr = [], [], []
        counts = np.zeros(len(graph.nodes), dtype=np.int64)
        for i, node in enumerate(graph.nodes):
            for rel, nbr, _w in graph.neighbors(node):
                key = (rel, node.uid, nbr.uid)
                rkey = (rel, nbr.uid, node.uid)
                if key in drop or rkey in drop:
                    continue
                entry_node.append(i)
                entry_rel.append(rel_pos[rel])
                entry_nbr.append(self.node_pos[nbr.uid])
                counts[i] += 1
        self.entry_node = np.asarray(entry_node, dtype=np.int64)
        self.entry_rel = np.asarray(entry_rel, dtype=np.int64)
        self.entry_nbr = np.asarray(entry_nbr, dtype=np.int64)
        self.counts = counts
        offsets = np.concatenate([[0], np.cumsum(counts)])
        self.nonempty = counts > 0
        self.seg_starts = offsets[:-1][self.nonempty]
        # rank of each node among nonempty nodes; -1 for isolated
        rank = np.cumsum(self.nonempty) - 1
        rank[~self.nonempty] = -1
        self.node_rank = rank
        self.entry_rank = rank[self.entry_node]

    @property
    def n_nodes(self) -> int:
        return len(self.node_uids)

    def ipc_indices(self) -> np.ndarray:
        return np.asarray([i for i, uid in enumerate(self.node_uids)
                           if uid.startswith("IPC:")], dtype=np.int64)


@dataclass
class _LayerCache:
    H_in: np.ndarray
    ZR: np.ndarray           # (R, N, d) relation-transformed node states
    TR: np.ndarray           # tanh(ZR)
    e_flat: np.ndarray
    alpha: np.ndarray
    m_rows: np.ndarray       # aggregated messages, nonempty nodes only
    norms: np.ndarray
    fallback: np.ndarray     # nonempty nodes whose message collapsed to ~0
    H_out: np.ndarray


def _layer_forward(tensors: GraphTensors, H: np.ndarray, lw: dict, la: dict,
                   relations: tuple[str, ...]) -> _LayerCache:
    n, d = H.shape
    R = len(relations)
    ZR = np.empty((R, n, d))
    TR = np.empty((R, n, d))
    ER = np.empty((R, n))
    for k, rel in enumerate(relations):
        ZR[k] = H @ lw[rel].T
        TR[k] = np.tanh(ZR[k])
        ER[k] = TR[k] @ la[rel]

    H_out = H.copy()    # isolated nodes pass through
    if tensors.entry_node.size == 0:
        return _LayerCache(H, ZR, TR, np.empty(0), np.empty(0),
                           np.empty((0, d)), np.empty(0),
                           np.zeros(0, dtype=bool), H_out)

    e_flat = ER[tensors.entry_rel, tensors.entry_nbr]
    seg_max = np.maximum.reduceat(e_flat, tensors.seg_starts)
    expe = np.exp(e_flat - seg_max[tensors.entry_rank])
    seg_sum = np.add.reduceat(expe, tensors.seg_starts)
    alpha = expe / seg_sum[tensors.entry_rank]

    Z_flat = ZR[tensors.entry_rel, tensors.entry_nbr]
    m_rows = np.add.reduceat(alpha[:, None] * Z_flat, tensors.seg_starts, axis=0)
    norms = np.linalg.norm(m_rows, axis=1)
    fallback = norms < _NORM_FLOOR
    safe = np.where(fallback, 1.0, norms)
    U = m_rows / safe[:, None]

    nonempty_idx = np.flatnonzero(tensors.nonempty)
    H_out[nonempty_idx[~fallback]] = U[~fallback]
    return _LayerCache(H, ZR, TR, e_flat, alpha, m_rows, norms, fallback, H_out)


def _layer_backward(tensors: GraphTensors, cache: _LayerCache, dH_out: np.ndarray,
                    lw: dict, la: dict, relations: tuple[str, ...]):
    """Returns (dH_in, dW per relation, da per relation)."""
    n, d = cache.H_in.shape
    R = len(relations)
    dH_in = np.zeros_like(cache.H_in)
    dZR = np.zeros((R, n, d))
    dE = np.zeros((R, n))

    iso = ~tensors.nonempty
    dH_in[iso] += dH_out[iso]

    if tensors.entry_node.size:
        nonempty_idx = np.flatnonzero(tensors.nonempty)
        # nodes whose aggregate collapsed used the pass-through path
        fb_nodes = nonempty_idx[cache.fallback]
        dH_in[fb_nodes] += dH_out[fb_nodes]

        dU = dH_out[nonempty_idx]
        safe = np.where(cache.fallback, 1.0, cache.norms)
        U = cache.m_rows / safe[:, None]
        # d/dm of m/||m||: (I - u u^T) / ||m||
        dm = (dU - U * np.sum(U * dU, axis=1, keepdims=True)) / safe[:, None]
        dm[cache.fallback] = 0.0

        dm_flat = dm[tensors.entry_rank]
        Z_flat = cache.ZR[tensors.entry_rel, tensors.entry_nbr]
        dalpha = np.sum(dm_flat * Z_flat, axis=1)
        # softmax jacobian within each node's segment
        dots = cache.alpha * dalpha
        seg_dot = np.add.reduceat(dots, tensors.seg_starts)
        de_flat = cache.alpha * (dalpha - seg_dot[tensors.entry_rank])
        np.add.at(dE, (tensors.entry_rel, tensors.entry_nbr), de_flat)
        np.add.at(dZR, (tensors.entry_rel, tensors.entry_nbr),
                  cache.alpha[:, None] * dm_flat)

    dW, da = {}, {}
    for k, rel in enumerate(relations):
        da[rel] = cache.TR[k].T @ dE[k]
        dT = dE[k][:, None] * la[rel][None, :]
        dZ = dZR[k] + dT * (1.0 - cache.TR[k] ** 2)
        dW[rel] = dZ.T @ cache.H_in
        dH_in += dZ @ lw[rel]
    return dH_in, dW, da


def forward(tensors: GraphTensors, H0: np.ndarray,
            params: EncoderParams) -> tuple[np.ndarray, list[_LayerCache]]:
    caches = []
    H = H0
    for l in range(params.layers):
        cache = _layer_forward(tensors, H, params.weights[l],
                               params.attention[l], params.relations)
        caches.append(cache)
        H = cache.H_out
    return H, caches


def hgt_layer_forward(graph: HeteroGraph, h_in: EmbeddingTable,
                      params: EncoderParams, layer: int) -> EmbeddingTable:
    """Single-layer message passing over the whole graph."""
    if layer >= params.layers:
        raise DataError(f"layer {layer} out of range (model has {params.layers})")
    tensors = GraphTensors(graph)
    H = h_in.vectors(tensors.node_uids)
    cache = _layer_forward(tensors, H, params.weights[layer],
                           params.attention[layer], params.relations)
    return EmbeddingTable(H.shape[1], list(tensors.node_uids),
                          cache.H_out.copy(), "structural")


def attention_weights(graph: HeteroGraph, h_in: EmbeddingTable,
                      params: EncoderParams) -> list[dict[str, list[tuple[str, str, float]]]]:
    """Per layer, per node uid: (relation, neighbor uid, alpha) triples."""
    tensors = GraphTensors(graph)
    H = h_in.vectors(tensors.node_uids)
    out = []
    for l in range(params.layers):
        cache = _layer_forward(tensors, H, params.weights[l],
                               params.attention[l], params.relations)
        per_node: dict[str, list[tuple[str, str, float]]] = {}
        for e in range(tensors.entry_node.size):
            uid = tensors.node_uids[tensors.entry_node[e]]
            per_node.setdefault(uid, []).append(
                (RELATIONS[tensors.entry_rel[e]],
                 tensors.node_uids[tensors.entry_nbr[e]],
                 float(cache.alpha[e])))
        out.append(per_node)
        H = cache.H_out
    return out


def _neg_log_sigmoid(x: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, -x)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-x))


def loss_and_grads(tensors: GraphTensors, H0: np.ndarray, params: EncoderParams,
                   pos: np.ndarray, neg: np.ndarray):
    """Class-balanced logistic link loss plus analytic parameter gradients.

    pos/neg are (m, 2) arrays of (patent_index, ipc_index) pairs scored by
    the dot product of final-layer embeddings.  Positives and negatives
    each contribute half the loss regardless of the sampling ratio, so a
    large negative batch cannot be satisfied by uniform repulsion.
    """
    Hf, caches = forward(tensors, H0, params)
    if len(pos) + len(neg) == 0:
        raise DataError("no edges to score")

    s_pos = np.sum(Hf[pos[:, 0]] * Hf[pos[:, 1]], axis=1) if len(pos) else np.empty(0)
    s_neg = np.sum(Hf[neg[:, 0]] * Hf[neg[:, 1]], axis=1) if len(neg) else np.empty(0)
    w_pos = 0.5 / len(pos) if len(pos) else 0.0
    w_neg = 0.5 / len(neg) if len(neg) else 0.0
    loss = (w_pos * np.sum(_neg_log_sigmoid(s_pos))
            + w_neg * np.sum(_neg_log_sigmoid(-s_neg)))

    dH = np.zeros_like(Hf)
    if len(pos):
        g = (_sigmoid(s_pos) - 1.0) * w_pos
        np.add.at(dH, pos[:, 0], g[:, None] * Hf[pos[:, 1]])
        np.add.at(dH, pos[:, 1], g[:, None] * Hf[pos[:, 0]])
    if len(neg):
        g = _sigmoid(s_neg) * w_neg
        np.add.at(dH, neg[:, 0], g[:, None] * Hf[neg[:, 1]])
        np.add.at(dH, neg[:, 1], g[:, None] * Hf[neg[:, 0]])

    grads_W = [dict() for _ in range(params.layers)]
    grads_a = [dict() for _ in range(params.layers)]
    for l in reversed(range(params.layers)):
        dH, dW, da = _layer_backward(tensors, caches[l], dH,
                                     params.weights[l], params.attention[l],
                                     params.relations)
        grads_W[l] = dW
        grads_a[l] = da
    return float(loss), grads_W, grads_a


def _positive_edges(graph: HeteroGraph, tensors: GraphTensors) -> np.ndarray:
    pairs = []
    for e in graph.edges_of("PatentIpc"):
        pairs.append((tensors.node_pos[e.src.uid], tensors.node_pos[e.dst.uid]))
    return np.asarray(sorted(pairs), dtype=np.int64)


def _sample_negatives(rng: np.random.Generator, pos: np.ndarray,
                      ipc_idx: np.ndarray, per_positive: int) -> np.ndarray:
    # uniform corruption of the IPC side; collisions with true edges are
    # rare enough to tolerate as sampling noise
    patents = np.repeat(pos[:, 0], per_positive)
    ipcs = rng.choice(ipc_idx, size=patents.size, replace=True)
    return np.column_stack([patents, ipcs])


@dataclass
class TrainResult:
    params: EncoderParams
    embeddings: EmbeddingTable
    losses: list[float] = field(default_factory=list)
    holdout_auc: float | None = None
    holdout_pairs: np.ndarray | None = None


def _rank_auc(scores_pos: np.ndarray, scores_neg: np.ndarray) -> float:
    """P(pos > neg) with ties counted half, via midranks."""
    all_scores = np.concatenate([scores_pos, scores_neg])
    order = np.argsort(all_scores, kind="stable")
    ranks = np.empty(all_scores.size)
    ranks[order] = np.arange(1, all_scores.size + 1)
    # average ranks over ties
    sorted_scores = all_scores[order]
    i = 0
    while i < sorted_scores.size:
        j = i
        while j + 1 < sorted_scores.size and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        if j > i:
            ranks[order[i:j + 1]] = 0.5 * (i + 1 + j + 1)
        i = j + 1
    n_pos, n_neg = scores_pos.size, scores_neg.size
    r_pos = np.sum(ranks[:n_pos])
    return float((r_pos - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def train(graph: HeteroGraph, init: EmbeddingTable, cfg: TrainConfig) -> TrainResult:
    """Fit the encoder and return structural embeddings for all nodes.

    A seeded fraction of Patent-IPC edges (only from patents with >= 2
    such edges) is held out of both the objective and message passing for
    scoring; the final encode runs over the full graph.
    """
    cfg.validate()
    full = GraphTensors(graph)
    all_pos = _positive_edges(graph, full)
    if all_pos.size == 0:
        raise DataError("degenerate graph: no Patent-IPC edges to train on")

    rng = np.random.default_rng(cfg.seed)
    ipc_idx = full.ipc_indices()

    # holdout split keeps every patent attached to at least one IPC
    holdout_mask = np.zeros(len(all_pos), dtype=bool)
    if cfg.holdout_fraction > 0.0:
        patent_deg = np.bincount(all_pos[:, 0], minlength=full.n_nodes)
        eligible = np.flatnonzero(patent_deg[all_pos[:, 0]] >= 2)
        n_hold = int(np.floor(cfg.holdout_fraction * len(all_pos)))
        n_hold = min(n_hold, len(eligible))
        if n_hold > 0:
            chosen = rng.choice(eligible, size=n_hold, replace=False)
            holdout_mask[chosen] = True
    train_pos = all_pos[~holdout_mask]
    hold_pos = all_pos[holdout_mask]
    if train_pos.size == 0:
        raise DataError("degenerate split: no training edges left")

    drop = set()
    for p, c in hold_pos:
        drop.add(("PatentIpc", full.node_uids[p], full.node_uids[c]))
    tensors = GraphTensors(graph, drop_edges=drop) if drop else full

    H0 = init.vectors(full.node_uids)
    params = init_params(init.dim, cfg.layers, cfg.seed)

    losses = []
    for _epoch in range(cfg.epochs):
        neg = _sample_negatives(rng, train_pos, ipc_idx, cfg.negatives_per_positive)
        loss, gW, ga = loss_and_grads(tensors, H0, params, train_pos, neg)
        losses.append(loss)
        for l in range(params.layers):
            for rel in params.relations:
                params.weights[l][rel] -= cfg.learning_rate * gW[l][rel]
                params.attention[l][rel] -= cfg.learning_rate * ga[l][rel]
        params.check_finite()

    Hf, _ = forward(full, H0, params)
    if not np.all(np.isfinite(Hf)):
        raise NumericalError("non-finite embeddings after training")
    table = EmbeddingTable(init.dim, list(full.node_uids), Hf.copy(), "structural")

    auc = None
    if len(hold_pos):
        neg_eval = _sample_negatives(rng, hold_pos, ipc_idx, 1)
        s_pos = np.sum(Hf[hold_pos[:, 0]] * Hf[hold_pos[:, 1]], axis=1)
        s_neg = np.sum(Hf[neg_eval[:, 0]] * Hf[neg_eval[:, 1]], axis=1)
        auc = _rank_auc(s_pos, s_neg)
    return TrainResult(params, table, losses, auc, hold_pos if len(hold_pos) else None)


def encode(graph: HeteroGraph, init: EmbeddingTable,
           params: EncoderParams) -> EmbeddingTable:
    """Forward pass over the full graph with fixed parameters."""
    tensors = GraphTensors(graph)
    H0 = init.vectors(tensors.node_uids)
    Hf, _ = forward(tensors, H0, params)
    return EmbeddingTable(init.dim, list(tensors.node_uids), Hf.copy(), "structural")


def gradient_check(graph: HeteroGraph, init: EmbeddingTable, cfg: TrainConfig,
                   epsilon: float = 1e-4, max_coords: int = 60) -> float:
    """Max relative error between analytic and central-difference gradients.

    Samples a parameter subset (seeded) and perturbs one coordinate at a
    time against a frozen batch of positive and negative edges.
    """
    cfg.validate()
    tensors = GraphTensors(graph)
    pos = _positive_edges(graph, tensors)
    if pos.size == 0:
        raise DataError("degenerate graph: no Patent-IPC edges")
    rng = np.random.default_rng(cfg.seed)
    neg = _sample_negatives(rng, pos, tensors.ipc_indices(),
                            cfg.negatives_per_positive)
    H0 = init.vectors(tensors.node_uids)
    params = init_params(init.dim, cfg.layers, cfg.seed)

    _, gW, ga = loss_and_grads(tensors, H0, params, pos, neg)

    coords = []
    for l in range(params.layers):
        for rel in params.relations:
            W = params.weights[l][rel]
            for _ in range(2):
                coords.append(("W", l, rel, (int(rng.integers(W.shape[0])),
                                             int(rng.integers(W.shape[1])))))
            coords.append(("a", l, rel, (int(rng.integers(W.shape[0])),)))
    rng.shuffle(coords)
    coords = coords[:max_coords]

    def loss_at(p: EncoderParams) -> float:
        val, _, _ = loss_and_grads(tensors, H0, p, pos, neg)
        return val

    max_err = 0.0
    for kind, l, rel, idx in coords:
        probe = params.copy()
        target = probe.weights[l][rel] if kind == "W" else probe.attention[l][rel]
        target[idx] += epsilon
        up = loss_at(probe)
        target[idx] -= 2 * epsilon
        down = loss_at(probe)
        numeric = (up - down) / (2 * epsilon)
        analytic = gW[l][rel][idx] if kind == "W" else ga[l][rel][idx]
        denom = max(abs(analytic) + abs(numeric), 1e-8)
        err = abs(analytic - numeric) / denom
        if abs(analytic) < 1e-12 and abs(numeric) < 1e-12:
            err = 0.0
        max_err = max(max_err, err)
    return max_err


def save_checkpoint(params: EncoderParams, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"#layers\t{params.layers}\n")
        fh.write("#dims\t" + "\t".join(str(d) for d in params.dims) + "\n")
        fh.write(f"#seed\t{params.seed}\n")
        fh.write("#relations\t" + "\t".join(params.relations) + "\n")
        for l in range(params.layers):
            for rel in params.relations:
                W = params.weights[l][rel]
                for r in range(W.shape[0]):
                    row = "\t".join(repr(float(v)) for v in W[r])
                    fh.write(f"W\t{l}\t{rel}\t{r}\t{row}\n")
                a = "\t".join(repr(float(v)) for v in params.attention[l][rel])
                fh.write(f"a\t{l}\t{rel}\t{a}\n")


def load_checkpoint(path: str) -> EncoderParams:
    layers = 0
    dims: tuple[int, ...] = ()
    seed = 0
    relations: tuple[str, ...] = RELATIONS
    weights: list[dict[str, np.ndarray]] = []
    attention: list[dict[str, np.ndarray]] = []
    rows: dict[tuple[int, str], list[tuple[int, list[float]]]] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            cells = line.rstrip("\n").split("\t")
            if cells[0] == "#layers":
                layers = int(cells[1])
                weights = [dict() for _ in range(layers)]
                attention = [dict() for _ in range(layers)]
            elif cells[0] == "#dims":
                dims = tuple(int(v) for v in cells[1:])
            elif cells[0] == "#seed":
                seed = int(cells[1])
            elif cells[0] == "#relations":
                relations = tuple(cells[1:])
            elif cells[0] == "W":
                l, rel, r = int(cells[1]), cells[2], int(cells[3])
                rows.setdefault((l, rel), []).append(
                    (r, [float(v) for v in cells[4:]]))
            elif cells[0] == "a":
                l, rel = int(cells[1]), cells[2]
                attention[l][rel] = np.asarray([float(v) for v in cells[3:]])
    for (l, rel), entries in rows.items():
        entries.sort()
        weights[l][rel] = np.asarray([vals for _, vals in entries])
    return EncoderParams(relations, dims, seed, weights, attention)
