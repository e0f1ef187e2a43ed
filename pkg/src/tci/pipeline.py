"""End-to-end orchestration with persisted, hashed, resumable stages.

Each stage writes its artifacts under the run directory and registers
them in a manifest that records the resolved configuration, the seed,
and a content hash for every file.  A stage whose artifacts already
exist is loaded rather than recomputed, so any stage can be re-entered;
replaying a manifest reproduces the whole run.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, config_from_sections
from .corpus import (CorpusData, load_ipc_texts, parse_corpus, require_nonempty,
                     save_corpus, save_ipc_texts)
from .embeddings import EmbeddingTable, fuse_embeddings, load_embeddings, save_embeddings
from .encoder import (EncoderParams, TrainConfig, encode, load_checkpoint,
                      save_checkpoint, train)
from .errors import DataError, NumericalError, TciError
from .graph import GraphConfig, HeteroGraph, build_graph, initial_features, load_graph, save_graph
from .index import ScoreTable, assemble_scores, load_scores, save_scores
from .ipc import truncate_code
from .metrics import PatentMetrics, build_cooc_network, compute_patent_metrics
from .plots import plot_correlation, plot_kde, plot_trend
from .stats import correlation_matrix, group_trend, kde_density, quality_regression

MANIFEST_NAME = "manifest.json"

_METRIC_COLUMNS = ("d1_fused", "d2_fused", "d1_structural", "d2_structural",
                   "d1_semantic", "d2_semantic", "breadth", "rao_stirling",
                   "clustering", "distance")


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _save_metrics(metrics: list[PatentMetrics], path: Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("patent_id\t" + "\t".join(_METRIC_COLUMNS) + "\n")
        for m in metrics:
            vals = "\t".join(repr(float(getattr(m, c))) for c in _METRIC_COLUMNS)
            fh.write(f"{m.patent_id}\t{vals}\n")


def _load_metrics(path: Path) -> list[PatentMetrics]:
    out = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split("\t")
        if tuple(header[1:]) != _METRIC_COLUMNS:
            raise DataError(f"unexpected metrics header in {path}")
        for line in fh:
            cells = line.rstrip("\n").split("\t")
            out.append(PatentMetrics(cells[0],
                                     *(float(v) for v in cells[1:])))
    return out


class PipelineRun:
    """A run directory plus the in-memory state of completed stages."""

    def __init__(self, cfg: RunConfig, outdir: str | Path):
        cfg.validate()
        self.cfg = cfg
        self.outdir = Path(outdir)
        self.outdir.mkdir(parents=True, exist_ok=True)
        self.artifacts: dict[str, str] = {}
        self.summary: dict[str, object] = {}
        self._corpus: CorpusData | None = None
        self._semantic: EmbeddingTable | None = None
        self._graph: HeteroGraph | None = None
        self._params: EncoderParams | None = None
        self._structural: EmbeddingTable | None = None
        self._fused: EmbeddingTable | None = None
        self._metrics: list[PatentMetrics] | None = None
        self._scores: ScoreTable | None = None

    # -- plumbing ---------------------------------------------------------

    def _path(self, rel: str) -> Path:
        p = self.outdir / rel
        p.parent.mkdir(parents=True, exist_ok=True)
        return p

    def _register(self, *rels: str) -> None:
        for rel in rels:
            self.artifacts[rel] = _sha256(self.outdir / rel)

    def _have(self, *rels: str) -> bool:
        return all((self.outdir / rel).exists() for rel in rels)

    @staticmethod
    def _stage_guard(name: str, exc: Exception) -> Exception:
        if isinstance(exc, TciError) and not getattr(exc, "stage", None):
            exc.stage = name
        return exc

    def _run_stage(self, name: str, fn):
        try:
            return fn()
        except Exception as exc:
            raise self._stage_guard(name, exc)

    # -- stages -----------------------------------------------------------

    def ensure_ingest(self) -> CorpusData:
        if self._corpus is not None:
            return self._corpus
        return self._run_stage("ingest", self._ingest)

    def _ingest(self) -> CorpusData:
        rels = ["ingest/corpus.jsonl", "ingest/diagnostics.tsv"]
        if self._have(*rels):
            result = parse_corpus(str(self._path(rels[0])), fmt="jsonl")
            texts_rel = "ingest/ipc_texts.tsv"
            texts = (load_ipc_texts(str(self._path(texts_rel)))
                     if self._have(texts_rel) else {})
            self._corpus = require_nonempty(
                CorpusData(result.corpus.records, texts))
            self._register(*rels)
            if texts:
                self._register(texts_rel)
            return self._corpus

        self.cfg.require_inputs()
        result = parse_corpus(self.cfg.corpus, fmt=self.cfg.corpus_format,
                              ipc_texts_path=self.cfg.ipc_texts or None)
        corpus = require_nonempty(result.corpus)
        save_corpus(corpus, str(self._path(rels[0])), fmt="jsonl")
        with open(self._path(rels[1]), "w", encoding="utf-8") as fh:
            fh.write("kind\tline\trecord_id\tdetail\n")
            for d in result.diagnostics:
                fh.write(f"{d.kind}\t{d.line}\t{d.record_id}\t{d.detail}\n")
        self._register(*rels)
        if corpus.ipc_texts:
            save_ipc_texts(corpus.ipc_texts, str(self._path("ingest/ipc_texts.tsv")))
            self._register("ingest/ipc_texts.tsv")
        self.summary["n_patents"] = len(corpus)
        self.summary["n_rejected"] = result.rejected
        self._corpus = corpus
        return corpus

    def ensure_embed(self) -> EmbeddingTable:
        if self._semantic is not None:
            return self._semantic
        return self._run_stage("embed", self._embed)

    def _embed(self) -> EmbeddingTable:
        rel = "embed/semantic.tsv"
        if self._have(rel):
            self._semantic = load_embeddings(str(self._path(rel)))
            self._register(rel)
            return self._semantic
        self.cfg.require_inputs()
        table = load_embeddings(self.cfg.embeddings)
        save_embeddings(table, str(self._path(rel)))
        self._register(rel)
        self.summary["embed_dim"] = table.dim
        self._semantic = table
        return table

    def ensure_graph(self) -> HeteroGraph:
        if self._graph is not None:
            return self._graph
        return self._run_stage("graph", self._graph_stage)

    def _graph_stage(self) -> HeteroGraph:
        rels = ["graph/edges.tsv", "graph/nodes.tsv"]
        if self._have(*rels):
            self._graph = load_graph(str(self._path(rels[0])),
                                     str(self._path(rels[1])))
            self._register(*rels)
            return self._graph
        corpus = self.ensure_ingest()
        semantic = self.ensure_embed()
        gcfg = GraphConfig(knn_k=self.cfg.knn_k,
                           sim_threshold=self.cfg.sim_threshold)
        graph = build_graph(corpus, semantic, gcfg)
        save_graph(graph, str(self._path(rels[0])), str(self._path(rels[1])))
        self._register(*rels)
        self.summary["graph_counts"] = graph.counts()
        self._graph = graph
        return graph

    def ensure_train(self) -> EncoderParams:
        if self._params is not None:
            return self._params
        return self._run_stage("train", self._train)

    def _train(self) -> EncoderParams:
        rels = ["train/checkpoint.tsv", "train/losses.tsv"]
        if self._have(*rels):
            self._params = load_checkpoint(str(self._path(rels[0])))
            self._register(*rels)
            return self._params
        graph = self.ensure_graph()
        semantic = self.ensure_embed()
        init = initial_features(graph, semantic)
        tcfg = TrainConfig(epochs=self.cfg.epochs,
                           learning_rate=self.cfg.learning_rate,
                           negatives_per_positive=self.cfg.negatives_per_positive,
                           layers=self.cfg.layers,
                           holdout_fraction=self.cfg.holdout_fraction,
                           seed=self.cfg.seed)
        result = train(graph, init, tcfg)
        save_checkpoint(result.params, str(self._path(rels[0])))
        with open(self._path(rels[1]), "w", encoding="utf-8") as fh:
            fh.write("epoch\tloss\n")
            for i, loss in enumerate(result.losses):
                fh.write(f"{i}\t{repr(loss)}\n")
        self._register(*rels)
        self.summary["initial_loss"] = result.losses[0]
        self.summary["final_loss"] = result.losses[-1]
        if result.holdout_auc is not None:
            self.summary["holdout_auc"] = result.holdout_auc
        self._params = result.params
        self._structural = result.embeddings
        return result.params

    def ensure_encode(self) -> EmbeddingTable:
        if self._structural is not None and "encode/structural.tsv" in self.artifacts:
            return self._structural
        return self._run_stage("encode", self._encode)

    def _encode(self) -> EmbeddingTable:
        rel = "encode/structural.tsv"
        if self._have(rel) and self._structural is None:
            self._structural = load_embeddings(str(self._path(rel)),
                                               kind="structural")
            self._register(rel)
            return self._structural
        if self._structural is None:
            graph = self.ensure_graph()
            semantic = self.ensure_embed()
            params = self.ensure_train()
            init = initial_features(graph, semantic)
            self._structural = encode(graph, init, params)
        if not np.all(np.isfinite(self._structural.matrix)):
            raise NumericalError("non-finite structural embeddings")
        save_embeddings(self._structural, str(self._path(rel)))
        self._register(rel)
        return self._structural

    def ensure_fuse(self) -> EmbeddingTable:
        if self._fused is not None:
            return self._fused
        return self._run_stage("fuse", self._fuse)

    def _fuse(self) -> EmbeddingTable:
        rel = "fuse/fused.tsv"
        if self._have(rel):
            self._fused = load_embeddings(str(self._path(rel)), kind="fused")
            self._register(rel)
            return self._fused
        corpus = self.ensure_ingest()
        semantic = self.ensure_embed()
        structural = self.ensure_encode()
        codes = corpus.distinct_ipcs()
        struct_ipc = structural.subset([f"IPC:{c}" for c in codes]).rename(
            {f"IPC:{c}": c for c in codes})
        fused = fuse_embeddings(struct_ipc, semantic.subset(codes))
        save_embeddings(fused, str(self._path(rel)))
        self._register(rel)
        self._fused = fused
        return fused

    def ensure_metrics(self) -> list[PatentMetrics]:
        if self._metrics is not None:
            return self._metrics
        return self._run_stage("metrics", self._metrics_stage)

    def _metrics_stage(self) -> list[PatentMetrics]:
        rel = "metrics/metrics.tsv"
        if self._have(rel):
            self._metrics = _load_metrics(self._path(rel))
            self._register(rel)
            return self._metrics
        corpus = self.ensure_ingest()
        semantic = self.ensure_embed()
        structural = self.ensure_encode()
        fused = self.ensure_fuse()
        codes = corpus.distinct_ipcs()
        struct_ipc = structural.subset([f"IPC:{c}" for c in codes]).rename(
            {f"IPC:{c}": c for c in codes})
        network = build_cooc_network(corpus, min_support=self.cfg.min_support)
        metrics = compute_patent_metrics(
            corpus, fused, struct_ipc, semantic.subset(codes), network,
            level=self.cfg.ipc_level, depth_k=self.cfg.depth_k,
            distance_penalty=self.cfg.resolved_penalty())
        _save_metrics(metrics, self._path(rel))
        self._register(rel)
        self._metrics = metrics
        return metrics

    def ensure_score(self) -> ScoreTable:
        if self._scores is not None:
            return self._scores
        return self._run_stage("score", self._score)

    def _score(self) -> ScoreTable:
        rel = "score/scores.tsv"
        if self._have(rel):
            self._scores = load_scores(str(self._path(rel)))
            self._register(rel)
            return self._scores
        metrics = self.ensure_metrics()
        table = assemble_scores(metrics)
        for name, col in table.columns.items():
            if not np.all(np.isfinite(col)):
                raise NumericalError(f"non-finite values in score column {name}")
        save_scores(table, str(self._path(rel)))
        self._register(rel)
        self.summary["weights"] = {name: [float(v) for v in w]
                                   for name, w in sorted(table.weights.items())}
        self._scores = table
        return table

    def ensure_report(self) -> None:
        self._run_stage("report", self._report)

    def _report(self) -> None:
        corpus = self.ensure_ingest()
        scores = self.ensure_score()
        by_id = corpus.by_id()
        records = [by_id[pid] for pid in scores.patent_ids]
        tci = scores.columns["v8"]

        variant_cols = {name: scores.columns[name]
                        for name in ("v1", "v2", "v3", "v4", "v5", "v6", "v7", "v8")}
        pearson_names, pearson = correlation_matrix(variant_cols, "pearson")
        spearman_names, spearman = correlation_matrix(variant_cols, "spearman")
        self._write_matrix("report/correlation_pearson.tsv", pearson_names, pearson)
        self._write_matrix("report/correlation_spearman.tsv", spearman_names, spearman)

        y = np.asarray([r.first_claims for r in records])
        if self.cfg.log1p_transform:
            y = np.log1p(y)
        controls = {
            "pages": np.asarray([float(r.pages) for r in records]),
            "claims": np.asarray([float(r.claims) for r in records]),
            "bcite": np.asarray([float(r.backward_citations) for r in records]),
        }
        years = np.asarray([r.year for r in records])
        reg = quality_regression(y, tci, controls, years)
        with open(self._path("report/regression.tsv"), "w", encoding="utf-8") as fh:
            fh.write("variable\tcoefficient\tstd_error\tt_value\tp_value\n")
            for i, name in enumerate(reg.names):
                fh.write(f"{name}\t{repr(float(reg.coefficients[i]))}\t"
                         f"{repr(float(reg.std_errors[i]))}\t"
                         f"{repr(float(reg.t_values[i]))}\t"
                         f"{repr(float(reg.p_values[i]))}\n")
            fh.write(f"r_squared\t{repr(reg.r_squared)}\t\t\t\n")
            fh.write(f"n_obs\t{reg.n_obs}\t\t\t\n")
        self.summary["regression_tci"] = {
            "coefficient": reg.coef("tci"), "std_error": reg.se("tci"),
            "p_value": reg.pvalue("tci"), "r_squared": reg.r_squared,
        }

        sections = [truncate_code(r.main_ipc, "section") for r in records]
        bw = self.cfg.resolved_bandwidth()
        curves: dict[str, tuple[np.ndarray, np.ndarray]] = {}
        curves["all"] = kde_density(tci, bandwidth=bw)
        for sec in sorted(set(sections)):
            vals = tci[np.asarray(sections) == sec]
            if vals.size >= 2 and np.ptp(vals) > 0:
                curves[sec] = kde_density(vals, bandwidth=bw)
        with open(self._path("report/kde.tsv"), "w", encoding="utf-8") as fh:
            fh.write("group\tgrid\tdensity\n")
            for label in sorted(curves):
                grid, dens = curves[label]
                for g, d in zip(grid, dens):
                    fh.write(f"{label}\t{repr(float(g))}\t{repr(float(d))}\n")

        trend_rows = []
        for group_by, labels in (("year", [str(r.year) for r in records]),
                                 ("ipc_section", sections)):
            for row in group_trend(tci, labels):
                trend_rows.append((group_by, row))
        with open(self._path("report/trend.tsv"), "w", encoding="utf-8") as fh:
            fh.write("group_by\tgroup\tmean\tmedian\tcount\n")
            for group_by, row in trend_rows:
                fh.write(f"{group_by}\t{row.group}\t{repr(row.mean)}\t"
                         f"{repr(row.median)}\t{row.count}\n")

        with open(self._path("report/summary.txt"), "w", encoding="utf-8") as fh:
            fh.write(f"patents scored: {len(records)}\n")
            fh.write(f"distinct codes: {len(corpus.distinct_ipcs())}\n")
            weights = self.summary.get("weights", {})
            if isinstance(weights, dict) and "v8" in weights:
                w = ", ".join(f"{v:.6f}" for v in weights["v8"])
                fh.write(f"index weights (depth-1, depth-2, breadth): {w}\n")
            fh.write(f"index coefficient on quality: {reg.coef('tci'):.6f} "
                     f"(se {reg.se('tci'):.6f}, p {reg.pvalue('tci'):.3g})\n")
            fh.write(f"r squared: {reg.r_squared:.6f}\n")

        plot_kde(curves, self._path("report/fig_density.png"),
                 title="Index density by section")
        year_rows = [r for gb, r in trend_rows if gb == "year"]
        plot_trend([r.group for r in year_rows], [r.mean for r in year_rows],
                   [r.median for r in year_rows],
                   self._path("report/fig_trend.png"), title="Index by year")
        plot_correlation(pearson_names, pearson,
                         self._path("report/fig_correlations.png"))
        self._register("report/correlation_pearson.tsv",
                       "report/correlation_spearman.tsv",
                       "report/regression.tsv", "report/kde.tsv",
                       "report/trend.tsv", "report/summary.txt",
                       "report/fig_density.png", "report/fig_trend.png",
                       "report/fig_correlations.png")

    def _write_matrix(self, rel: str, names: list[str], matrix: np.ndarray) -> None:
        with open(self._path(rel), "w", encoding="utf-8") as fh:
            fh.write("\t" + "\t".join(names) + "\n")
            for i, name in enumerate(names):
                cells = ["" if np.isnan(matrix[i, j]) else repr(float(matrix[i, j]))
                         for j in range(len(names))]
                fh.write(name + "\t" + "\t".join(cells) + "\n")

    # -- manifest ---------------------------------------------------------

    def write_manifest(self) -> Path:
        manifest = {
            "package": f"tci {__version__}",
            "seed": self.cfg.seed,
            "config": self.cfg.to_sections(),
            "artifacts": dict(sorted(self.artifacts.items())),
            "summary": self.summary,
        }
        path = self.outdir / MANIFEST_NAME
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return path


def run_pipeline(cfg: RunConfig, outdir: str | Path) -> Path:
    """All stages in order; returns the manifest path."""
    run = PipelineRun(cfg, outdir)
    run.ensure_ingest()
    run.ensure_embed()
    run.ensure_graph()
    run.ensure_train()
    run.ensure_encode()
    run.ensure_fuse()
    run.ensure_metrics()
    run.ensure_score()
    run.ensure_report()
    return run.write_manifest()


def replay_manifest(manifest_path: str | Path, outdir: str | Path) -> Path:
    """Re-run a manifest's configuration into a fresh directory."""
    with open(manifest_path, encoding="utf-8") as fh:
        manifest = json.load(fh)
    cfg = config_from_sections(manifest["config"])
    cfg.seed = int(manifest["seed"])
    return run_pipeline(cfg, outdir)
