"""Acceptance gate: every release criterion with its stated tolerance.

Each test prints exactly one PASS/FAIL line (visible with ``pytest -s``
or in captured output).  Oracle criteria check the numeric kernels
against independent scalar re-derivations; recovery criteria run the
full pipeline on a 2000-patent synthetic corpus with a planted effect
and verify the planted structure is found.
"""

import hashlib
import json
import math
import time
from collections import Counter

import numpy as np
import pytest
from scipy import stats as sp_stats

from tci.config import RunConfig
from tci.corpus import CorpusData
from tci.encoder import TrainConfig, attention_weights, encode, gradient_check, init_params
from tci.graph import build_graph, initial_features
from tci.index import compose_tci, entropy_weights, load_scores
from tci.metrics import CoocNetwork, breadth_raw, depth1, depth2
from tci.pipeline import PipelineRun, run_pipeline
from tci.stats import correlation_matrix, ols_fit, quality_regression, welch_ttest
from tci.synth import SynthConfig, generate_synthetic_corpus, load_truth, write_synthetic

_T0 = time.monotonic()

_SECTIONS = "ABCDEFGH"


def _check(ok: bool, label: str, detail: str = "") -> None:
    tail = f" ({detail})" if detail else ""
    print(f"{'PASS' if ok else 'FAIL'}: {label}{tail}")
    assert ok, f"{label}{tail}"


def _random_code(rng) -> str:
    sec = _SECTIONS[rng.integers(len(_SECTIONS))]
    klass = int(rng.integers(1, 100))
    sub = chr(ord("A") + int(rng.integers(26)))
    return f"{sec}{klass:02d}{sub} 1/00"


# -- oracle criteria ---------------------------------------------------------


class TestOracles:
    def test_c01_breadth_entropy(self):
        """Entropy diversity on 1000 random code lists, tolerance 1e-9."""
        rng = np.random.default_rng(101)
        max_err = 0.0
        for _ in range(1000):
            codes = [_random_code(rng) for _ in range(int(rng.integers(1, 12)))]
            got = breadth_raw(codes, "subclass")
            counts = Counter(c[:4] for c in codes)       # subclass prefix
            total = sum(counts.values())
            want = -sum((c / total) * math.log(c / total)
                        for c in counts.values())
            max_err = max(max_err, abs(got - want))
        distinct = [f"{s}01A 1/00" for s in _SECTIONS]
        uniform_err = abs(breadth_raw(distinct, "subclass")
                          - math.log(len(distinct)))
        _check(max_err <= 1e-9 and uniform_err <= 1e-12,
               "C01 breadth entropy matches direct computation "
               "on 1000 random code lists; uniform case hits log N",
               f"max err {max_err:.3e}, uniform err {uniform_err:.3e}")

    def test_c02_entropy_weights(self):
        """Entropy weights on 200 random matrices, tolerance 1e-9."""
        rng = np.random.default_rng(102)
        max_err = 0.0
        max_sum_err = 0.0
        max_const_w = 0.0
        for trial in range(200):
            n = int(rng.integers(2, 60))
            m = int(rng.integers(1, 5))
            mat = rng.uniform(size=(n, m))
            if trial % 5 == 0:
                mat[:, 0] = 0.7                          # constant column
            got = entropy_weights(mat)
            # scalar re-derivation
            div = []
            for j in range(m):
                col = mat[:, j]
                lo, hi = col.min(), col.max()
                norm = np.zeros(n) if hi == lo else (col - lo) / (hi - lo)
                t = norm.sum()
                p = np.full(n, 1.0 / n) if t == 0 else norm / t
                ent = -sum(pi * math.log(pi) for pi in p if pi > 0) / math.log(n)
                div.append(1.0 - ent)
            s = sum(div)
            want = (np.full(m, 1.0 / m) if s <= 0
                    else np.asarray([d / s for d in div]))
            max_err = max(max_err, float(np.max(np.abs(got - want))))
            max_sum_err = max(max_sum_err, abs(float(got.sum()) - 1.0))
            if trial % 5 == 0 and m > 1:
                max_const_w = max(max_const_w, float(got[0]))
        _check(max_err <= 1e-9 and max_sum_err <= 1e-12 and max_const_w <= 1e-9,
               "C02 entropy weights match brute force on 200 matrices; "
               "weights sum to one; constant columns get zero weight",
               f"max err {max_err:.3e}, const-col weight {max_const_w:.3e}")

    def test_c03_depth_metrics(self):
        """Depth metrics on 500 random vector sets, tolerance 1e-9."""
        rng = np.random.default_rng(103)
        max_err = 0.0
        edge_ok = True
        for _ in range(500):
            dim = int(rng.integers(2, 9))
            main = rng.normal(size=dim)
            n_sec = int(rng.integers(0, 6))
            secs = [rng.normal(size=dim) for _ in range(n_sec)]
            got1 = depth1(main, secs)
            got2 = depth2(secs, k=1.0)
            if n_sec == 0:
                edge_ok &= got1 == 0.0 and got2 == 0.0
                continue
            sims = []
            for v in secs:
                c = float(main @ v / (np.linalg.norm(main) * np.linalg.norm(v)))
                sims.append(max(0.0, min(1.0, c)))
            want1 = 1.0 - min(sims)
            max_err = max(max_err, abs(got1 - want1))
            if n_sec == 1:
                edge_ok &= got2 == 0.0
                continue
            pair = []
            for i in range(n_sec):
                for j in range(i + 1, n_sec):
                    c = float(secs[i] @ secs[j] /
                              (np.linalg.norm(secs[i]) * np.linalg.norm(secs[j])))
                    pair.append(max(0.0, min(1.0, c)))
            alpha = len(pair) / (len(pair) + 1.0)
            want2 = 1.0 - (alpha * (sum(pair) / len(pair))
                           + (1 - alpha) * max(pair))
            max_err = max(max_err, abs(got2 - want2))
        _check(max_err <= 1e-9 and edge_ok,
               "C03 depth metrics match direct formulas on 500 random sets; "
               "zero and single-secondary cases score exactly 0",
               f"max err {max_err:.3e}")

    def test_c04_network_scores(self):
        """Clustering and distances on 50 random networks, <= 30 nodes."""
        rng = np.random.default_rng(104)
        max_clust_err = 0.0
        max_dist_err = 0.0
        for _ in range(50):
            n = int(rng.integers(3, 31))
            names = [f"{_SECTIONS[i % 8]}{i:02d}A 1/00" for i in range(n)]
            adj = {c: set() for c in names}
            for i in range(n):
                for j in range(i + 1, n):
                    if rng.random() < 0.15:
                        adj[names[i]].add(names[j])
                        adj[names[j]].add(names[i])
            net = CoocNetwork(list(names), adj)
            # triangle/wedge reference
            for c in names:
                nbrs = sorted(adj[c])
                k = len(nbrs)
                tri = sum(1 for x in range(k) for y in range(x + 1, k)
                          if nbrs[y] in adj[nbrs[x]])
                want = 0.0 if k < 2 else 2.0 * tri / (k * (k - 1))
                max_clust_err = max(max_clust_err,
                                    abs(net.local_clustering(c) - want))
            # Floyd-Warshall reference
            D = np.full((n, n), np.inf)
            np.fill_diagonal(D, 0.0)
            for i in range(n):
                for j in range(n):
                    if names[j] in adj[names[i]]:
                        D[i, j] = 1.0
            for k_ in range(n):
                D = np.minimum(D, D[:, k_, None] + D[None, k_, :])
            for i in range(n):
                for j in range(n):
                    got = net.shortest_path(names[i], names[j])
                    if np.isinf(D[i, j]):
                        max_dist_err = max(max_dist_err,
                                           0.0 if np.isinf(got) else np.inf)
                    else:
                        max_dist_err = max(max_dist_err, abs(got - D[i, j]))
        _check(max_clust_err <= 1e-12 and max_dist_err <= 1e-9,
               "C04 network clustering matches triangle counting and "
               "distances match Floyd-Warshall on 50 random networks",
               f"clustering err {max_clust_err:.3e}, "
               f"distance err {max_dist_err:.3e}")

    def test_c05_ols(self):
        """OLS on 100 random designs, tolerance 1e-8."""
        rng = np.random.default_rng(105)
        max_beta_err = 0.0
        max_orth_err = 0.0
        for _ in range(100):
            n = int(rng.integers(20, 81))
            k = int(rng.integers(1, 5))
            X = rng.normal(size=(n, k))
            y = rng.normal(size=n)
            fit = ols_fit(y, X, [f"x{j}" for j in range(k)])
            design = np.column_stack([np.ones(n), X])
            want, *_ = np.linalg.lstsq(design, y, rcond=None)
            max_beta_err = max(max_beta_err,
                               float(np.max(np.abs(fit.coefficients - want))))
            resid = y - design @ fit.coefficients
            max_orth_err = max(max_orth_err,
                               float(np.max(np.abs(design.T @ resid))))
        # year-shift absorption: constant per-year shifts leave the slope alone
        n = 120
        x = rng.normal(size=n)
        years = rng.integers(2000, 2004, size=n)
        y = 1.0 + 2.0 * x + rng.normal(size=n)
        base = quality_regression(y, x, None, years)
        shift = quality_regression(y + np.where(years == 2002, 5.0, 0.0),
                                   x, None, years)
        absorb_err = abs(base.coef("tci") - shift.coef("tci"))
        _check(max_beta_err <= 1e-8 and max_orth_err <= 1e-8
               and absorb_err <= 1e-8,
               "C05 OLS matches least-squares reference on 100 designs; "
               "residuals orthogonal; year shifts absorbed by dummies",
               f"beta err {max_beta_err:.3e}, orth err {max_orth_err:.3e}, "
               f"absorb err {absorb_err:.3e}")

    def test_c06_correlations(self):
        """Correlation matrices against references, tolerance 1e-10."""
        rng = np.random.default_rng(106)
        max_err = 0.0
        diag_exact = True
        for _ in range(20):
            cols = {f"c{j}": np.round(rng.normal(size=40), 2)
                    for j in range(4)}
            names, pearson = correlation_matrix(cols, "pearson")
            want_p = np.corrcoef(np.vstack([cols[c] for c in names]))
            max_err = max(max_err, float(np.max(np.abs(pearson - want_p))))
            _, spearman = correlation_matrix(cols, "spearman")
            for i in range(4):
                diag_exact &= pearson[i, i] == 1.0 and spearman[i, i] == 1.0
                for j in range(i + 1, 4):
                    want_s = sp_stats.spearmanr(cols[names[i]],
                                                cols[names[j]]).statistic
                    max_err = max(max_err, abs(spearman[i, j] - want_s))
        _check(max_err <= 1e-10 and diag_exact,
               "C06 Pearson and rank correlations match references; "
               "diagonals are exactly one",
               f"max err {max_err:.3e}")

    def test_c07_oracle_runtime(self):
        """All oracle criteria complete within 60 seconds."""
        elapsed = time.monotonic() - _T0
        _check(elapsed < 60.0, "C07 oracle suite finishes within 60 s",
               f"elapsed {elapsed:.1f} s")


# -- encoder criteria --------------------------------------------------------


@pytest.fixture(scope="module")
def small_graph(small_corpus, small_semantic):
    graph = build_graph(small_corpus, small_semantic)
    init = initial_features(graph, small_semantic)
    return graph, init


class TestEncoder:
    def test_c08_gradient_check(self, small_graph):
        """Analytic gradients within 1e-3 of central differences."""
        graph, init = small_graph
        assert len(graph.nodes) <= 50
        err = gradient_check(graph, init, TrainConfig(layers=2, seed=2),
                             epsilon=1e-4, max_coords=60)
        _check(err < 1e-3,
               "C08 encoder gradients match central differences at 1e-4 "
               "on a small graph",
               f"max rel err {err:.3e}")

    def test_c09_attention_normalized(self, small_graph):
        """Attention over each typed neighborhood sums to one."""
        graph, init = small_graph
        params = init_params(init.dim, layers=2, seed=3)
        worst = 0.0
        for layer in attention_weights(graph, init, params):
            for triples in layer.values():
                worst = max(worst, abs(sum(a for _, _, a in triples) - 1.0))
        _check(worst <= 1e-6,
               "C09 attention weights sum to one per node and layer",
               f"worst deviation {worst:.3e}")

    def test_c10_input_order_invariance(self, small_corpus, small_semantic):
        """Same corpus in a different order encodes bit-identically."""
        g1 = build_graph(small_corpus, small_semantic)
        g2 = build_graph(
            CorpusData(records=list(reversed(small_corpus.records))),
            small_semantic)
        params = init_params(small_semantic.dim, layers=2, seed=4)
        out1 = encode(g1, initial_features(g1, small_semantic), params)
        out2 = encode(g2, initial_features(g2, small_semantic), params)
        identical = (out1.ids == out2.ids
                     and np.array_equal(out1.matrix, out2.matrix))
        _check(identical,
               "C10 encoder output is bit-identical under input reordering")


# -- planted-effect criteria over the full pipeline --------------------------


@pytest.fixture(scope="session")
def big_run(tmp_path_factory):
    """One 2000-patent pipeline run with a planted effect, seed 42."""
    base = tmp_path_factory.mktemp("acceptance")
    synth_cfg = SynthConfig()                 # 2000 patents, beta 0.5
    result = generate_synthetic_corpus(synth_cfg, seed=42)
    inputs = write_synthetic(result, base / "inputs")

    cfg = RunConfig(corpus=str(inputs["corpus"]),
                    ipc_texts=str(inputs["ipc_texts"]),
                    embeddings=str(inputs["semantic"]),
                    seed=42)
    outdir = base / "run_a"
    run = PipelineRun(cfg, outdir)
    t0 = time.monotonic()
    run.ensure_ingest()
    run.ensure_embed()
    run.ensure_graph()
    t_train0 = time.monotonic()
    run.ensure_train()
    t_train = time.monotonic() - t_train0
    run.ensure_encode()
    run.ensure_fuse()
    run.ensure_metrics()
    run.ensure_score()
    run.ensure_report()
    manifest_path = run.write_manifest()
    t_total = time.monotonic() - t0

    with open(manifest_path, encoding="utf-8") as fh:
        manifest = json.load(fh)
    scores = load_scores(str(outdir / "score" / "scores.tsv"))
    truth = load_truth(inputs["truth"])
    return {
        "cfg": cfg,
        "outdir": outdir,
        "manifest_path": manifest_path,
        "manifest": manifest,
        "scores": scores,
        "truth": truth,
        "corpus": run.ensure_ingest(),
        "t_train": t_train,
        "t_total": t_total,
        "beta": synth_cfg.beta,
    }


class TestPlantedRecovery:
    def test_c11_training_run(self, big_run):
        """Training converges with useful held-out ranking inside 5 min."""
        summary = big_run["manifest"]["summary"]
        ok = (summary["final_loss"] < summary["initial_loss"]
              and summary["holdout_auc"] > 0.6
              and big_run["t_train"] < 300.0)
        _check(ok,
               "C11 2000-patent training: loss decreases, holdout AUC > 0.6, "
               "under 5 minutes",
               f"loss {summary['initial_loss']:.4f} -> "
               f"{summary['final_loss']:.4f}, AUC {summary['holdout_auc']:.3f}, "
               f"{big_run['t_train']:.1f} s")

    def test_c12_group_separation(self, big_run):
        """Cross-domain patents score significantly higher than others."""
        groups = {pid: g for pid, g, _ in big_run["truth"]}
        v8 = big_run["scores"].columns["v8"]
        ids = big_run["scores"].patent_ids
        high = np.asarray([v8[i] for i, p in enumerate(ids)
                           if groups[p] == "high"])
        low = np.asarray([v8[i] for i, p in enumerate(ids)
                          if groups[p] == "low"])
        t, p = welch_ttest(high, low)
        ok = t > 0 and p < 0.01
        _check(ok,
               "C12 planted high group scores above the low group "
               "(Welch p < 0.01)",
               f"t {t:.1f}, p {p:.3g}, means {high.mean():.3f} vs "
               f"{low.mean():.3f}")

    def test_c13_coefficient_recovery(self, big_run):
        """Quality regression recovers the planted coefficient within 3 SE."""
        reg = big_run["manifest"]["summary"]["regression_tci"]
        beta = big_run["beta"]
        dev = abs(reg["coefficient"] - beta) / reg["std_error"]
        ok = dev <= 3.0 and reg["p_value"] < 0.01
        _check(ok,
               "C13 regression recovers the planted effect within 3 standard "
               "errors with p < 0.01",
               f"coef {reg['coefficient']:.4f} vs planted {beta}, "
               f"se {reg['std_error']:.4f}, off by {dev:.2f} se, "
               f"p {reg['p_value']:.3g}")

    def test_c14_variant_agreement(self, big_run):
        """The index tracks its depth-based variants more closely than the
        co-occurrence network variants."""
        cols = big_run["scores"].columns
        names, m = correlation_matrix(
            {k: cols[k] for k in ("v1", "v2", "v5", "v6", "v8")}, "pearson")
        idx = {n: i for i, n in enumerate(names)}
        r = {k: m[idx["v8"], idx[k]] for k in ("v1", "v2", "v5", "v6")}
        ok = (r["v5"] > r["v1"] and r["v5"] > r["v2"]
              and r["v6"] > r["v1"] and r["v6"] > r["v2"])
        _check(ok,
               "C14 index correlates higher with embedding-route variants "
               "than with network variants",
               ", ".join(f"r(v8,{k}) {r[k]:.3f}" for k in sorted(r)))

    def test_c15_pipeline_determinism(self, big_run, tmp_path_factory):
        """Pipeline finishes inside 10 minutes; a rerun is byte-identical."""
        outdir_b = tmp_path_factory.mktemp("acceptance_rerun")
        manifest_b_path = run_pipeline(big_run["cfg"], outdir_b)
        with open(manifest_b_path, encoding="utf-8") as fh:
            manifest_b = json.load(fh)
        same_hashes = manifest_b["artifacts"] == big_run["manifest"]["artifacts"]
        byte_same = True
        for rel in big_run["manifest"]["artifacts"]:
            a = (big_run["outdir"] / rel).read_bytes()
            b = (outdir_b / rel).read_bytes()
            byte_same &= a == b
            byte_same &= (hashlib.sha256(a).hexdigest()
                          == big_run["manifest"]["artifacts"][rel])
        ok = big_run["t_total"] < 600.0 and same_hashes and byte_same
        _check(ok,
               "C15 pipeline completes within 10 minutes and reruns "
               "byte-identically",
               f"{big_run['t_total']:.1f} s, "
               f"{len(big_run['manifest']['artifacts'])} artifacts compared")

    def test_c16_index_invariants(self, big_run):
        """Score bounds, weight ordering, and monotone composition."""
        cols = big_run["scores"].columns
        bounds_ok = all(
            float(cols[c].min()) >= 0.0 and float(cols[c].max()) <= 1.0
            for c in ("D1", "D2", "breadth_norm", "v8"))
        w = big_run["manifest"]["summary"]["weights"]["v8"]
        weight_ok = w[0] > w[1]
        rng = np.random.default_rng(116)
        violations = 0
        for _ in range(10_000):
            comp = rng.uniform(size=(1, 3))
            weights = rng.uniform(0.05, 1.0, size=3)
            weights /= weights.sum()
            j = int(rng.integers(3))
            bumped = comp.copy()
            bumped[0, j] = min(1.0, bumped[0, j] + rng.uniform(0.01, 0.5))
            before = compose_tci(comp, weights)[0]
            after = compose_tci(bumped, weights)[0]
            if after < before:
                violations += 1
        ok = bounds_ok and weight_ok and violations == 0
        _check(ok,
               "C16 scores stay in [0, 1], depth-1 outweighs depth-2, and "
               "10000 monotonicity trials show zero violations",
               f"weights {w[0]:.4f} > {w[1]:.4f}, violations {violations}")
