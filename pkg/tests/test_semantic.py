"""Semantic metrics: frozen examples, seeded-resampling behavior, invariances."""

import numpy as np
import pytest

from motioneval.errors import (
    EmptyCorpus,
    BadK,
    DimensionMismatch,
    EmptyValues,
    InsufficientOutputs,
    ZeroVector,
)
from motioneval.semantic import (
    RetrievalPool,
    asr,
    bootstrap,
    build_retrieval_pools,
    derive_seed,
    diversity,
    matching_score,
    multimodality,
    pool_hit,
    r_precision,
)


def random_orthogonal(rng, dim):
    q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    return q


class TestMatchingScore:
    def test_identical_vectors(self):
        v = np.array([1.0, 2.0, 3.0])
        assert matching_score(v, v) == 0.0

    def test_unit_axes(self):
        assert matching_score([1.0, 0.0], [0.0, 1.0]) == pytest.approx(np.sqrt(2))

    def test_hand_norm(self):
        assert matching_score([1.0, 2.0, 2.0], [0.0, 0.0, 0.0]) == pytest.approx(3.0)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            matching_score([1.0, 2.0], [1.0, 2.0, 3.0])

    def test_orthogonal_invariance(self):
        rng = np.random.default_rng(4)
        t = rng.standard_normal(16)
        a = rng.standard_normal(16)
        rot = random_orthogonal(rng, 16)
        assert matching_score(rot @ t, rot @ a) == pytest.approx(matching_score(t, a))


def make_pool(anchor, vectors, gt_index):
    candidates = tuple((f"c{i}", np.asarray(v, dtype=np.float64)) for i, v in enumerate(vectors))
    return RetrievalPool(anchor=np.asarray(anchor, dtype=np.float64),
                         candidates=candidates, gt_index=gt_index)


class TestRPrecision:
    def test_exact_match_wins(self):
        pool = make_pool([0.0, 0.0], [[0.0, 0.0], [5.0, 5.0], [9.0, 9.0]], 0)
        assert r_precision([pool], 1) == 1.0

    def test_second_nearest(self):
        pool = make_pool([0.0, 0.0], [[1.0, 0.0], [2.0, 0.0], [9.0, 9.0]], 1)
        assert r_precision([pool], 1) == 0.0
        assert r_precision([pool], 2) == 1.0

    def test_tie_break_by_list_order(self):
        # all candidates equidistant; ground truth first in list -> top-k hit
        pool = make_pool([0.0, 0.0], [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]], 0)
        assert pool_hit(pool, 1)
        # same distances but ground truth last -> not in top-1
        pool2 = make_pool([0.0, 0.0], [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]], 2)
        assert not pool_hit(pool2, 1)

    def test_bad_k(self):
        pool = make_pool([0.0], [[1.0], [2.0]], 0)
        with pytest.raises(BadK):
            pool_hit(pool, 0)
        with pytest.raises(BadK):
            pool_hit(pool, 3)

    def test_scale_invariance(self):
        rng = np.random.default_rng(12)
        pools = []
        scaled = []
        for _ in range(20):
            anchor = rng.standard_normal(8)
            vectors = rng.standard_normal((6, 8))
            gt = int(rng.integers(6))
            pools.append(make_pool(anchor, vectors, gt))
            scaled.append(make_pool(anchor * 3.7, vectors * 3.7, gt))
        for k in (1, 2, 3):
            assert r_precision(pools, k) == r_precision(scaled, k)


class TestAsr:
    def test_identical_pairs(self):
        pairs = [(np.ones(4), np.ones(4))] * 3
        assert asr(pairs) == 1.0

    def test_orthogonal_pairs(self):
        pairs = [(np.array([1.0, 0.0]), np.array([0.0, 1.0]))] * 4
        assert asr(pairs) == 0.0

    def test_half_above_threshold(self):
        close = (np.array([1.0, 0.0]), np.array([1.0, 0.1]))
        far = (np.array([1.0, 0.0]), np.array([0.1, 1.0]))
        assert asr([close, far, close, far]) == 0.5

    def test_zero_vector_rejected(self):
        with pytest.raises(ZeroVector):
            asr([(np.zeros(3), np.ones(3))])

    def test_per_vector_scaling_invariance(self):
        rng = np.random.default_rng(31)
        pairs = [(rng.standard_normal(8), rng.standard_normal(8)) for _ in range(10)]
        scaled = [(gt * rng.uniform(0.1, 5.0), out * rng.uniform(0.1, 5.0))
                  for gt, out in pairs]
        assert asr(pairs) == asr(scaled)

    def test_threshold_is_strict(self):
        # cosine exactly at the threshold must not count
        gt = np.array([1.0, 0.0])
        out = np.array([0.6, 0.8])  # cosine = 0.6 exactly
        assert asr([(gt, out)], threshold=0.6) == 0.0


class TestMultimodality:
    def test_identical_outputs_mean_zero(self):
        outputs = {"p1": [np.ones(6)] * 4, "p2": [np.zeros(6)] * 3}
        summary = multimodality(outputs, pairs=20, seed=0)
        assert summary.mean == 0.0
        assert summary.half_width == 0.0

    def test_single_distinct_pair(self):
        a = np.zeros(4)
        b = np.zeros(4)
        b[0] = 4.0
        summary = multimodality({"p": [a, b]}, pairs=50, seed=1)
        assert summary.mean == pytest.approx(4.0)

    def test_same_seed_identical(self):
        rng = np.random.default_rng(8)
        outputs = {f"p{i}": [rng.standard_normal(6) for _ in range(4)] for i in range(3)}
        s1 = multimodality(outputs, pairs=30, seed=42)
        s2 = multimodality(outputs, pairs=30, seed=42)
        assert s1 == s2

    def test_insufficient_outputs(self):
        with pytest.raises(InsufficientOutputs):
            multimodality({"p": [np.ones(3)]}, pairs=10, seed=0)

    def test_orthogonal_invariance(self):
        rng = np.random.default_rng(10)
        vecs = [rng.standard_normal(8) for _ in range(5)]
        rot = random_orthogonal(rng, 8)
        s1 = multimodality({"p": vecs}, pairs=40, seed=3)
        s2 = multimodality({"p": [rot @ v for v in vecs]}, pairs=40, seed=3)
        assert s1.mean == pytest.approx(s2.mean)


class TestDiversity:
    def test_identical_vectors_zero(self):
        summary = diversity([np.ones(5)] * 10, pairs=4, seed=0)
        assert summary.mean == 0.0

    def test_two_clusters_monte_carlo(self):
        # two point-clusters 10 apart; cross-cluster pairs have distance 10,
        # within-cluster 0; expected mean 5 with large with-replacement draws
        vectors = [np.zeros(3)] * 2 + [np.array([10.0, 0.0, 0.0])] * 2
        pairs = 200_000
        summary = diversity(vectors, pairs=pairs, seed=7)
        # standard error: distances are Bernoulli(1/2)*10 -> sigma = 5
        se = 5.0 / np.sqrt(pairs)
        assert abs(summary.mean - 5.0) < 4 * se

    def test_reseeding_stays_within_interval(self):
        rng = np.random.default_rng(19)
        vectors = [rng.standard_normal(8) for _ in range(1000)]
        s1 = diversity(vectors, pairs=300, seed=1)
        s2 = diversity(vectors, pairs=300, seed=2)
        assert abs(s1.mean - s2.mean) < 3 * max(s1.half_width + s2.half_width, 1e-9)

    def test_determinism(self):
        rng = np.random.default_rng(20)
        vectors = [rng.standard_normal(4) for _ in range(10)]
        assert diversity(vectors, pairs=5, seed=9) == diversity(vectors, pairs=5, seed=9)

    def test_empty_rejected(self):
        with pytest.raises(EmptyCorpus):
            diversity([], pairs=5, seed=0)


class TestBootstrap:
    def test_constant_values(self):
        summary = bootstrap([2.5] * 50, replicates=200, seed=0)
        assert summary.mean == 2.5
        assert summary.half_width == 0.0

    def test_bernoulli_standard_error(self):
        values = [0.0] * 500 + [1.0] * 500
        summary = bootstrap(values, replicates=1000, seed=123)
        analytic = np.sqrt(0.5 * 0.5 / 1000)  # 0.0158
        assert summary.mean == 0.5
        assert abs(summary.half_width - analytic) / analytic < 0.20

    def test_same_seed_identical(self):
        values = list(np.linspace(0, 1, 40))
        assert bootstrap(values, 300, seed=5) == bootstrap(values, 300, seed=5)

    def test_empty_rejected(self):
        with pytest.raises(EmptyValues):
            bootstrap([], 200, seed=0)


class TestDerivedSeeds:
    def test_stable_across_calls(self):
        assert derive_seed(5, "mm", "p1") == derive_seed(5, "mm", "p1")

    def test_distinct_parts_distinct_seeds(self):
        seeds = {derive_seed(5, "mm", f"p{i}") for i in range(100)}
        assert len(seeds) == 100


class TestPoolBuilding:
    def test_pool_size_and_ground_truth(self):
        rng = np.random.default_rng(40)
        motion = {f"c{i}": rng.standard_normal(8) for i in range(40)}
        text = {f"p{i}": rng.standard_normal(8) for i in range(40)}
        clip_prompts = {f"c{i}": f"p{i}" for i in range(40)}
        pools = build_retrieval_pools(motion, text, clip_prompts, pool_size=32, seed=0)
        assert len(pools) == 40
        for clip_id, pool in pools.items():
            assert len(pool.candidates) == 32
            assert pool.candidates[pool.gt_index][0] == clip_id

    def test_deterministic(self):
        rng = np.random.default_rng(41)
        motion = {f"c{i}": rng.standard_normal(4) for i in range(10)}
        text = {f"p{i}": rng.standard_normal(4) for i in range(10)}
        clip_prompts = {f"c{i}": f"p{i}" for i in range(10)}
        p1 = build_retrieval_pools(motion, text, clip_prompts, pool_size=8, seed=3)
        p2 = build_retrieval_pools(motion, text, clip_prompts, pool_size=8, seed=3)
        assert [p.gt_index for p in p1.values()] == [p.gt_index for p in p2.values()]
        assert [[c[0] for c in p.candidates] for p in p1.values()] == \
               [[c[0] for c in p.candidates] for p in p2.values()]
