"""Synthetic patent corpus with a planted convergence effect.

Codes live in clusters with orthonormal semantic centers, so
cross-cluster classification mixes are far apart in embedding space and
within-cluster mixes are close.  Half the patents (the "high" group) mix
clusters; the rest stay inside one cluster.  A quality outcome is
generated linearly from a semantic convergence score with a known
coefficient, plus observable controls and year effects, so downstream
regressions have a recoverable ground truth.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import CorpusData, PatentRecord, save_corpus, save_ipc_texts
from .embeddings import EmbeddingTable, make_table, save_embeddings
from .errors import ConfigError
from .index import compose_tci, enforce_weight_constraint, entropy_weights
from .metrics import breadth_raw, depth1, depth2

_SECTIONS = "ABCDEFGHY"


class InvalidSynthConfigError(ConfigError):
    """Synthetic generator settings are out of range."""


@dataclass
class SynthConfig:
    n_patents: int = 2000
    n_clusters: int = 8
    codes_per_cluster: int = 20
    embed_dim: int = 24
    high_fraction: float = 0.5
    high_secondary_range: tuple[int, int] = (3, 6)
    low_secondary_range: tuple[int, int] = (0, 2)
    cluster_spread: float = 0.15
    beta: float = 0.5
    noise_sigma: float = 0.5
    gamma_pages: float = 0.05
    gamma_claims: float = 0.03
    gamma_bcite: float = 0.02
    year_start: int = 2003
    year_end: int = 2024
    year_effect_sigma: float = 0.3
    quality_intercept: float = 5.0
    n_applicants: int = 120
    topics_per_patent: tuple[int, int] = (1, 3)

    def validate(self) -> None:
        if self.n_patents < 1:
            raise InvalidSynthConfigError("n_patents must be >= 1")
        if not (1 <= self.n_clusters <= len(_SECTIONS)):
            raise InvalidSynthConfigError(
                f"n_clusters must be in [1, {len(_SECTIONS)}]")
        if self.codes_per_cluster < 1:
            raise InvalidSynthConfigError("codes_per_cluster must be >= 1")
        if self.embed_dim < self.n_clusters:
            raise InvalidSynthConfigError(
                "embed_dim must be at least n_clusters for orthogonal centers")
        if not (0.0 <= self.high_fraction <= 1.0):
            raise InvalidSynthConfigError("high_fraction must be in [0, 1]")
        lo, hi = self.high_secondary_range
        if not (1 <= lo <= hi):
            raise InvalidSynthConfigError("high secondary range must be >= 1")
        if hi > self.n_clusters - 1:
            raise InvalidSynthConfigError(
                "high secondary count cannot exceed the other clusters")
        lo2, hi2 = self.low_secondary_range
        if not (0 <= lo2 <= hi2):
            raise InvalidSynthConfigError("low secondary range invalid")
        if hi2 > self.codes_per_cluster - 1:
            raise InvalidSynthConfigError(
                "low secondary count cannot exceed the cluster's other codes")
        if self.year_end < self.year_start:
            raise InvalidSynthConfigError("year range is empty")
        if self.noise_sigma < 0:
            raise InvalidSynthConfigError("noise_sigma must be >= 0")


@dataclass
class SynthResult:
    corpus: CorpusData
    semantic: EmbeddingTable
    groups: dict[str, str]                    # patent_id -> high | low
    planted_scores: dict[str, float] = field(repr=False, default_factory=dict)
    beta: float = 0.0


def _code_name(cluster: int, idx: int) -> str:
    """Deterministic valid code per (cluster, index), one per subclass."""
    section = _SECTIONS[cluster]
    klass = (idx % 99) + 1
    letter = chr(ord("A") + (idx % 26))
    return f"{section}{klass:02d}{letter} 1/00"


def _zipf_weights(n: int) -> np.ndarray:
    w = 1.0 / np.arange(1, n + 1)
    return w / w.sum()


def generate_synthetic_corpus(cfg: SynthConfig, seed: int = 0) -> SynthResult:
    """Draw a corpus, semantic code vectors, and the planted outcome.

    Everything is derived from one seeded generator; the same (config,
    seed) pair reproduces the output bit for bit.
    """
    cfg.validate()
    rng = np.random.default_rng(seed)

    # orthonormal cluster centers via QR of a Gaussian matrix
    raw = rng.normal(size=(cfg.embed_dim, cfg.n_clusters))
    q, _ = np.linalg.qr(raw)
    centers = q.T[:cfg.n_clusters]

    codes: list[list[str]] = []
    vectors: dict[str, np.ndarray] = {}
    for c in range(cfg.n_clusters):
        row = []
        for m in range(cfg.codes_per_cluster):
            code = _code_name(c, m)
            vec = centers[c] + cfg.cluster_spread * rng.normal(size=cfg.embed_dim)
            vectors[code] = vec / np.linalg.norm(vec)
            row.append(code)
        codes.append(row)
    semantic = make_table(vectors, kind="semantic")

    cluster_w = _zipf_weights(cfg.n_clusters)
    code_w = _zipf_weights(cfg.codes_per_cluster)

    n_high = int(round(cfg.high_fraction * cfg.n_patents))
    labels = np.array(["high"] * n_high + ["low"] * (cfg.n_patents - n_high))
    rng.shuffle(labels)

    years = rng.integers(cfg.year_start, cfg.year_end + 1, size=cfg.n_patents)
    year_levels = list(range(cfg.year_start, cfg.year_end + 1))
    year_effects = {yr: rng.normal(0.0, cfg.year_effect_sigma)
                    for yr in year_levels}

    # applicants and topics have home clusters, so patents draw them from
    # their own field most of the time (like real filers and field topics)
    applicant_pool = [f"Applicant {k:03d}" for k in range(cfg.n_applicants)]
    applicant_home = rng.integers(0, cfg.n_clusters, size=cfg.n_applicants)
    topic_pool = {c: [f"topic-{c}-{t}" for t in range(4)]
                  for c in range(cfg.n_clusters)}

    records: list[PatentRecord] = []
    groups: dict[str, str] = {}
    d1_col, d2_col, br_col = [], [], []
    pages_all, claims_all, bcite_all = [], [], []

    for i in range(cfg.n_patents):
        pid = f"SYN{i:06d}"
        group = str(labels[i])
        main_cluster = int(rng.choice(cfg.n_clusters, p=cluster_w))
        main_code = codes[main_cluster][int(rng.choice(cfg.codes_per_cluster,
                                                       p=code_w))]
        if group == "high":
            lo, hi = cfg.high_secondary_range
            n_sec = int(rng.integers(lo, hi + 1))
            others = [c for c in range(cfg.n_clusters) if c != main_cluster]
            other_w = cluster_w[others] / cluster_w[others].sum()
            chosen = rng.choice(others, size=n_sec, replace=False, p=other_w)
            secondaries = [codes[int(c)][int(rng.choice(cfg.codes_per_cluster,
                                                        p=code_w))]
                           for c in chosen]
        else:
            lo, hi = cfg.low_secondary_range
            n_sec = int(rng.integers(lo, hi + 1))
            pool = [c for c in codes[main_cluster] if c != main_code]
            n_sec = min(n_sec, len(pool))
            idx = rng.choice(len(pool), size=n_sec, replace=False)
            secondaries = [pool[int(k)] for k in sorted(idx)]

        n_topics = int(rng.integers(cfg.topics_per_patent[0],
                                    cfg.topics_per_patent[1] + 1))
        home_topics = topic_pool[main_cluster]
        topic_idx = rng.choice(len(home_topics), size=min(n_topics, len(home_topics)),
                               replace=False)
        topics = [home_topics[int(t)] for t in sorted(topic_idx)]
        home_applicants = [a for a in range(cfg.n_applicants)
                           if applicant_home[a] == main_cluster]
        if home_applicants and rng.random() < 0.8:
            applicants = [applicant_pool[int(rng.choice(home_applicants))]]
        else:
            applicants = [applicant_pool[int(rng.integers(cfg.n_applicants))]]

        pages = int(1 + rng.poisson(8))
        claims = int(1 + rng.poisson(10))
        bcite = int(rng.poisson(5))
        fcite = int(rng.poisson(3))

        main_vec = semantic.vector(main_code)
        sec_vecs = [semantic.vector(c) for c in secondaries]
        d1_col.append(depth1(main_vec, sec_vecs))
        d2_col.append(depth2(sec_vecs))
        br_col.append(breadth_raw([main_code] + secondaries))
        pages_all.append(pages)
        claims_all.append(claims)
        bcite_all.append(bcite)

        records.append(PatentRecord(
            patent_id=pid, year=int(years[i]), main_ipc=main_code,
            secondary_ipcs=tuple(secondaries), applicants=tuple(applicants),
            topics=tuple(topics), first_claims=0.0, forward_citations=fcite,
            backward_citations=bcite, pages=pages, claims=claims))
        groups[pid] = group

    # planted score: the same entropy-weighted depth/breadth composite the
    # scorer computes, here on the generator's own semantic vectors
    d1 = np.asarray(d1_col)
    d2 = np.asarray(d2_col)
    br = np.asarray(br_col)
    span = br.max() - br.min()
    br_norm = (br - br.min()) / span if span > 0 else np.zeros_like(br)
    if cfg.n_patents >= 2:
        comp = np.column_stack([d1, d2, br_norm])
        weights = enforce_weight_constraint(entropy_weights(comp))
        z = compose_tci(comp, weights)
    else:
        z = np.zeros(cfg.n_patents)

    noise = rng.normal(0.0, cfg.noise_sigma, size=cfg.n_patents)
    final_records = []
    planted: dict[str, float] = {}
    for i, rec in enumerate(records):
        quality = (cfg.quality_intercept + cfg.beta * z[i]
                   + cfg.gamma_pages * pages_all[i]
                   + cfg.gamma_claims * claims_all[i]
                   + cfg.gamma_bcite * bcite_all[i]
                   + year_effects[rec.year] + noise[i])
        final_records.append(PatentRecord(
            patent_id=rec.patent_id, year=rec.year, main_ipc=rec.main_ipc,
            secondary_ipcs=rec.secondary_ipcs, applicants=rec.applicants,
            topics=rec.topics, first_claims=float(quality),
            forward_citations=rec.forward_citations,
            backward_citations=rec.backward_citations,
            pages=rec.pages, claims=rec.claims))
        planted[rec.patent_id] = float(z[i])

    texts = {code: f"Synthetic domain {code.split()[0]}: methods and "
                   f"apparatus for area {ci}-{mi}"
             for ci, row in enumerate(codes) for mi, code in enumerate(row)}
    corpus = CorpusData(final_records, texts)
    return SynthResult(corpus, semantic, groups, planted, cfg.beta)


def write_synthetic(result: SynthResult, outdir: str | Path) -> dict[str, Path]:
    """Write corpus, code texts, semantic vectors, and the truth sidecar."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = {
        "corpus": outdir / "corpus.jsonl",
        "ipc_texts": outdir / "ipc_texts.tsv",
        "semantic": outdir / "semantic.tsv",
        "truth": outdir / "truth.tsv",
    }
    save_corpus(result.corpus, paths["corpus"], fmt="jsonl")
    save_ipc_texts(result.corpus.ipc_texts, paths["ipc_texts"])
    save_embeddings(result.semantic, paths["semantic"])
    with open(paths["truth"], "w", encoding="utf-8") as fh:
        fh.write("patent_id\tgroup\tplanted_beta\n")
        for rec in result.corpus.records:
            fh.write(f"{rec.patent_id}\t{result.groups[rec.patent_id]}\t"
                     f"{repr(result.beta)}\n")
    return paths


def load_truth(path: str | Path) -> list[tuple[str, str, float]]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split("\t")
        if header != ["patent_id", "group", "planted_beta"]:
            raise InvalidSynthConfigError("unexpected truth sidecar header")
        for line in fh:
            pid, group, beta = line.rstrip("\n").split("\t")
            rows.append((pid, group, float(beta)))
    return rows
