"""Tests for depth, breadth, diversity, and co-occurrence network metrics."""

import numpy as np
import pytest

from tci.corpus import CorpusData, PatentRecord
from tci.embeddings import make_table
from tci.errors import DataError
from tci.metrics import (
    average_distance_score,
    breadth_normalized,
    breadth_raw,
    build_cooc_network,
    category_proportions,
    clustering_coefficient_score,
    compute_patent_metrics,
    depth1,
    depth2,
    rao_stirling,
)


def _vectors_with_gram(gram: np.ndarray) -> list[np.ndarray]:
    """Unit vectors whose pairwise dot products realize a Gram matrix."""
    return list(np.linalg.cholesky(gram))


def _rec(pid, main, secondary=(), year=2010):
    return PatentRecord(pid, year, main, secondary_ipcs=tuple(secondary))


class TestDepth1:
    def test_most_divergent_secondary_sets_the_score(self):
        main = np.array([1.0, 0.0, 0.0])
        near = np.array([0.9, np.sqrt(1 - 0.81), 0.0])   # cos 0.9
        far = np.array([0.3, np.sqrt(1 - 0.09), 0.0])    # cos 0.3
        np.testing.assert_allclose(depth1(main, [near, far]), 0.7, atol=1e-12)

    def test_no_secondaries_scores_zero(self):
        assert depth1(np.array([1.0, 0.0]), []) == 0.0

    def test_negative_similarity_clamps_to_distance_one(self):
        main = np.array([1.0, 0.0])
        opposite = np.array([-1.0, 0.0])
        assert depth1(main, [opposite]) == 1.0

    def test_bounded_in_unit_interval(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            main = rng.normal(size=4)
            secs = [rng.normal(size=4) for _ in range(rng.integers(1, 5))]
            assert 0.0 <= depth1(main, secs) <= 1.0


class TestDepth2:
    def test_three_secondaries_with_known_similarities(self):
        # pairwise similarities 0.2, 0.5, 0.8: the average 0.5 and the
        # maximum 0.8 blend with weight 3/4 on the average, giving
        # 1 - (0.375 + 0.2) = 0.425
        gram = np.array([[1.0, 0.2, 0.5],
                         [0.2, 1.0, 0.8],
                         [0.5, 0.8, 1.0]])
        vecs = _vectors_with_gram(gram)
        np.testing.assert_allclose(depth2(vecs, k=1.0), 0.425, atol=1e-9)

    def test_fewer_than_two_scores_zero(self):
        assert depth2([]) == 0.0
        assert depth2([np.array([1.0, 0.0])]) == 0.0

    def test_single_pair_blends_half_and_half(self):
        # one pair: alpha = 1/2, mean == max == s, so depth = 1 - s
        s = 0.6
        gram = np.array([[1.0, s], [s, 1.0]])
        vecs = _vectors_with_gram(gram)
        np.testing.assert_allclose(depth2(vecs, k=1.0), 1.0 - s, atol=1e-12)

    def test_k_tempers_small_samples(self):
        # larger k shifts weight toward the maximum similarity, which can
        # only lower the blended distance when max > mean
        gram = np.array([[1.0, 0.2, 0.5],
                         [0.2, 1.0, 0.8],
                         [0.5, 0.8, 1.0]])
        vecs = _vectors_with_gram(gram)
        assert depth2(vecs, k=5.0) < depth2(vecs, k=1.0)

    def test_identical_secondaries_score_zero(self):
        v = np.array([0.6, 0.8])
        np.testing.assert_allclose(depth2([v, v.copy()]), 0.0, atol=1e-12)


class TestBreadth:
    def test_entropy_of_known_distribution(self):
        # categories with shares (1/2, 1/4, 1/4)
        codes = ["G06F 1/00", "G06F 3/00", "A61K 38/00", "H04L 29/06"]
        np.testing.assert_allclose(breadth_raw(codes, "subclass"),
                                   1.0397207708399179, atol=1e-9)

    def test_uniform_distribution_hits_log_n(self):
        codes = ["G06F 1/00", "A61K 38/00", "H04L 29/06", "B60L 53/00"]
        np.testing.assert_allclose(breadth_raw(codes, "subclass"),
                                   np.log(4.0), atol=1e-12)

    def test_single_category_is_zero(self):
        assert breadth_raw(["G06F 1/00", "G06F 3/00"], "subclass") == 0.0
        assert breadth_raw([], "subclass") == 0.0

    def test_level_changes_grouping(self):
        codes = ["G06F 1/00", "G06N 3/08"]
        assert breadth_raw(codes, "section") == 0.0       # both section G
        assert breadth_raw(codes, "subclass") > 0.0

    def test_proportions_sum_to_one(self):
        codes = ["G06F 1/00", "G06N 3/08", "A61K 38/00"]
        props = category_proportions(codes, "class")
        np.testing.assert_allclose(sum(props.values()), 1.0, atol=1e-12)
        assert props == {"A61": pytest.approx(1 / 3), "G06": pytest.approx(2 / 3)}

    def test_unknown_level_rejected(self):
        with pytest.raises(DataError):
            category_proportions(["G06F 1/00"], "kingdom")

    def test_normalization(self):
        raw = np.array([0.0, 0.5, 1.0, 2.0])
        np.testing.assert_allclose(breadth_normalized(raw),
                                   [0.0, 0.25, 0.5, 1.0], atol=1e-12)
        np.testing.assert_array_equal(breadth_normalized(np.full(3, 0.7)),
                                      np.zeros(3))


class TestRaoStirling:
    def test_two_orthogonal_categories(self):
        # category shares 2/3 and 1/3 with centroid distance 1:
        # ordered-pair sum = 2 * (2/3)(1/3) * 1 = 4/9
        table = make_table({
            "G06F 1/00": np.array([1.0, 0.0]),
            "G06F 3/00": np.array([1.0, 0.0]),
            "A61K 38/00": np.array([0.0, 1.0]),
        })
        codes = ["G06F 1/00", "G06F 3/00", "A61K 38/00"]
        np.testing.assert_allclose(rao_stirling(codes, table, "subclass"),
                                   4.0 / 9.0, atol=1e-12)

    def test_single_category_scores_zero(self):
        table = make_table({"G06F 1/00": np.array([1.0, 0.0]),
                            "G06F 3/00": np.array([0.0, 1.0])})
        assert rao_stirling(["G06F 1/00", "G06F 3/00"], table, "section") == 0.0

    def test_identical_centroids_score_zero(self):
        table = make_table({"G06F 1/00": np.array([1.0, 0.0]),
                            "A61K 38/00": np.array([1.0, 0.0])})
        np.testing.assert_allclose(
            rao_stirling(["G06F 1/00", "A61K 38/00"], table, "subclass"),
            0.0, atol=1e-12)


class TestCoocNetwork:
    def _path_network(self):
        # patents {A,B} and {B,C} induce the path A - B - C
        corpus = CorpusData(records=[
            _rec("P1", "A01B 1/00", ["B01C 1/00"]),
            _rec("P2", "B01C 1/00", ["C01D 1/00"]),
        ])
        return build_cooc_network(corpus)

    def test_path_distances(self):
        net = self._path_network()
        assert net.shortest_path("A01B 1/00", "B01C 1/00") == 1.0
        assert net.shortest_path("A01B 1/00", "C01D 1/00") == 2.0
        assert net.diameter() == 2

    def test_disconnected_is_infinite(self):
        corpus = CorpusData(records=[
            _rec("P1", "A01B 1/00", ["B01C 1/00"]),
            _rec("P2", "C01D 1/00", ["D01E 1/00"]),
        ])
        net = build_cooc_network(corpus)
        assert np.isinf(net.shortest_path("A01B 1/00", "C01D 1/00"))
        assert net.diameter() == 1

    def test_min_support_filters_rare_pairs(self):
        corpus = CorpusData(records=[
            _rec("P1", "A01B 1/00", ["B01C 1/00"]),
            _rec("P2", "A01B 1/00", ["B01C 1/00"]),
            _rec("P3", "A01B 1/00", ["C01D 1/00"]),
        ])
        net = build_cooc_network(corpus, min_support=2)
        assert net.degree("A01B 1/00") == 1
        assert not net.adjacency["C01D 1/00"]

    def test_invalid_min_support(self):
        with pytest.raises(DataError):
            build_cooc_network(CorpusData(), min_support=0)

    def test_triangle_clustering(self):
        corpus = CorpusData(records=[
            _rec("P1", "A01B 1/00", ["B01C 1/00", "C01D 1/00"]),
        ])
        net = build_cooc_network(corpus)
        for code in net.nodes:
            assert net.local_clustering(code) == 1.0

    def test_star_center_has_zero_clustering(self):
        corpus = CorpusData(records=[
            _rec("P1", "A01B 1/00", ["B01C 1/00"]),
            _rec("P2", "A01B 1/00", ["C01D 1/00"]),
        ])
        net = build_cooc_network(corpus)
        assert net.local_clustering("A01B 1/00") == 0.0   # leaves not linked
        assert net.local_clustering("B01C 1/00") == 0.0   # degree < 2


class TestNetworkScores:
    def test_average_distance_on_path(self):
        corpus = CorpusData(records=[
            _rec("P1", "A01B 1/00", ["B01C 1/00"]),
            _rec("P2", "B01C 1/00", ["C01D 1/00"]),
        ])
        net = build_cooc_network(corpus)
        probe = _rec("PX", "A01B 1/00", ["B01C 1/00", "C01D 1/00"])
        # pairs (A,B)=1, (A,C)=2, (B,C)=1 -> mean 4/3
        np.testing.assert_allclose(average_distance_score(probe, net),
                                   4.0 / 3.0, atol=1e-12)

    def test_disconnected_pair_uses_penalty(self):
        corpus = CorpusData(records=[
            _rec("P1", "A01B 1/00", ["B01C 1/00"]),
            _rec("P2", "C01D 1/00", ["D01E 1/00"]),
        ])
        net = build_cooc_network(corpus)
        probe = _rec("PX", "A01B 1/00", ["C01D 1/00"])
        # default penalty is diameter + 1 = 2
        np.testing.assert_allclose(average_distance_score(probe, net), 2.0)
        np.testing.assert_allclose(
            average_distance_score(probe, net, penalty=7.0), 7.0)

    def test_single_code_scores_zero(self):
        net = build_cooc_network(CorpusData(records=[
            _rec("P1", "A01B 1/00", ["B01C 1/00"])]))
        assert average_distance_score(_rec("PX", "A01B 1/00"), net) == 0.0

    def test_clustering_score_averages_over_codes(self):
        corpus = CorpusData(records=[
            _rec("P1", "A01B 1/00", ["B01C 1/00", "C01D 1/00"]),
            _rec("P2", "A01B 1/00", ["D01E 1/00"]),
        ])
        net = build_cooc_network(corpus)
        # A: nbrs {B, C, D}, links B-C only -> 1/3; B and C: 1.0; D: deg 1 -> 0
        probe = _rec("PX", "A01B 1/00", ["B01C 1/00", "D01E 1/00"])
        want = (1.0 / 3.0 + 1.0 + 0.0) / 3.0
        np.testing.assert_allclose(clustering_coefficient_score(probe, net),
                                   want, atol=1e-12)

    def test_absent_codes_contribute_zero(self):
        net = build_cooc_network(CorpusData(records=[
            _rec("P1", "A01B 1/00", ["B01C 1/00"])]))
        probe = _rec("PX", "Z99Z 1/00")
        assert clustering_coefficient_score(probe, net) == 0.0


class TestComputePatentMetrics:
    def test_agrees_with_standalone_functions(self, small_corpus, small_semantic):
        codes = small_corpus.distinct_ipcs()
        table = small_semantic.subset(codes)
        net = build_cooc_network(small_corpus)
        rows = compute_patent_metrics(small_corpus, table, table, table, net)
        assert [r.patent_id for r in rows] == [r.patent_id
                                               for r in small_corpus.records]
        by_id = {r.patent_id: r for r in rows}
        for rec in small_corpus.records:
            m = by_id[rec.patent_id]
            main = table.vector(rec.main_ipc)
            secs = [table.vector(c) for c in rec.secondary_ipcs]
            np.testing.assert_allclose(m.d1_fused, depth1(main, secs), atol=1e-12)
            np.testing.assert_allclose(m.d2_fused, depth2(secs), atol=1e-12)
            assert m.d1_fused == m.d1_structural == m.d1_semantic
            np.testing.assert_allclose(
                m.breadth, breadth_raw(list(rec.all_ipcs())), atol=1e-12)
            np.testing.assert_allclose(
                m.rao_stirling,
                rao_stirling(list(rec.all_ipcs()), table), atol=1e-12)
            np.testing.assert_allclose(
                m.clustering, clustering_coefficient_score(rec, net), atol=1e-12)
            np.testing.assert_allclose(
                m.distance, average_distance_score(rec, net), atol=1e-12)
