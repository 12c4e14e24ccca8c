"""Candidate samplers: pool semantics, padding, determinism, and distributions.

Statistical checks run against fixed seeds so outcomes are reproducible; the
tolerances follow the stated oracles (Monte Carlo ratios, chi-square bounds).
"""

import io
from collections import Counter

import numpy as np
import pytest

from tlpeval.dataset import Query
from tlpeval.sampling import (
    SHARED,
    SamplerConfig,
    export_candidates_csv,
    historical_sample,
    inductive_sample,
    popularity_sample,
    shared_fixed_sample,
    uniform_sample,
    uniform_sample_batch,
)

# chi-square 0.999 quantiles by degrees of freedom, for the distribution oracles
CHI2_999 = {3: 16.27, 4: 18.47, 5: 20.52, 9: 27.88}


def query(src=0, t=10, true_dst=2, filter_set=(), ordinal=0):
    return Query(src=src, t=t, true_dst=true_dst, filter_set=frozenset(filter_set), origin_idx=ordinal)


class TestUniform:
    def test_pool_exhaustion_takes_whole_pool(self):
        cfg = SamplerConfig("uniform", n_s=4, seed=1)
        cs = uniform_sample(query(true_dst=2), 5, cfg)
        assert sorted(cs.candidates) == [0, 1, 3, 4]

    def test_determinism(self):
        cfg = SamplerConfig("uniform", n_s=7, seed=99)
        a = uniform_sample(query(ordinal=12), 100, cfg)
        b = uniform_sample(query(ordinal=12), 100, cfg)
        assert np.array_equal(a.candidates, b.candidates)

    def test_distinct_ordinals_differ(self):
        cfg = SamplerConfig("uniform", n_s=7, seed=99)
        a = uniform_sample(query(ordinal=0), 100, cfg)
        b = uniform_sample(query(ordinal=1), 100, cfg)
        assert not np.array_equal(a.candidates, b.candidates)

    def test_filtered_pool_too_small(self):
        cfg = SamplerConfig("uniform", n_s=2, seed=0, collision_mode="filtered")
        with pytest.raises(ValueError, match="size 1"):
            uniform_sample(query(true_dst=1, filter_set={0}), 3, cfg)

    def test_marginal_inclusion_probability(self):
        # oracle: each eligible node included with probability n_s/|pool|,
        # checked within 3 standard errors over >= 10^4 draws
        num_nodes, n_s, m = 30, 6, 20_000
        pool = np.array([i for i in range(num_nodes) if i != 2])
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([7])))
        draws = uniform_sample_batch(pool, n_s, m, rng)
        p = n_s / len(pool)
        se = np.sqrt(p * (1 - p) / m)
        counts = Counter(draws.ravel().tolist())
        for node in pool:
            assert abs(counts[node] / m - p) <= 3 * se


class TestHistorical:
    HISTORY = {0: np.array([1, 2, 3])}

    def test_pool_containment(self):
        cfg = SamplerConfig("historical", n_s=2, seed=5)
        cs = historical_sample(query(true_dst=3), self.HISTORY, 50, cfg)
        assert set(cs.candidates) <= {1, 2} and len(cs.candidates) == 2

    def test_unseen_source_falls_back_to_uniform(self):
        cfg = SamplerConfig("historical", n_s=5, seed=5)
        cs = historical_sample(query(src=9, true_dst=3), self.HISTORY, 50, cfg)
        assert len(set(cs.candidates.tolist())) == 5
        assert 3 not in cs.candidates

    def test_padding_arithmetic(self):
        # 1 historical partner available, n_s=3 -> exactly 1 from pool + 2 uniform
        history = {0: np.array([7])}
        cfg = SamplerConfig("historical", n_s=3, seed=5)
        cs = historical_sample(query(true_dst=3), history, 50, cfg)
        assert len(cs.candidates) == 3
        assert len(set(cs.candidates.tolist())) == 3
        assert cs.candidates[0] == 7
        assert not set(cs.candidates[1:].tolist()) & {7, 3}

    def test_shortfall_without_padding(self):
        cfg = SamplerConfig("historical", n_s=3, seed=5, pad_with_uniform=False)
        with pytest.raises(ValueError, match="padding is disabled"):
            historical_sample(query(true_dst=3), self.HISTORY, 50, cfg)


class TestInductive:
    def test_empty_pool_all_uniform(self):
        cfg = SamplerConfig("inductive", n_s=4, seed=2)
        cs = inductive_sample(query(), {}, {}, 40, cfg)
        assert len(cs.candidates) == 4

    def test_pool_exhaustion_exact(self):
        cfg = SamplerConfig("inductive", n_s=2, seed=2)
        seen = {0: np.array([7, 9])}
        cs = inductive_sample(query(true_dst=1), seen, {}, 40, cfg)
        assert sorted(cs.candidates) == [7, 9]

    def test_train_pairs_excluded(self):
        cfg = SamplerConfig("inductive", n_s=1, seed=2)
        seen = {0: np.array([7, 9])}
        cs = inductive_sample(query(true_dst=1), seen, {0: np.array([7])}, 40, cfg)
        assert list(cs.candidates) == [9]

    def test_shortfall_error(self):
        cfg = SamplerConfig("inductive", n_s=2, seed=2, pad_with_uniform=False)
        with pytest.raises(ValueError, match="padding is disabled"):
            inductive_sample(query(true_dst=1), {0: np.array([7])}, {}, 40, cfg)


class TestPopularity:
    def test_weight_ratio_monte_carlo(self):
        # oracle: counts {1: 100, 2: 1} -> node 1 drawn with prob 100/101, 2% tolerance
        counts = np.zeros(5)
        counts[1], counts[2] = 100, 1
        cfg = SamplerConfig("popularity", n_s=1)
        hits = 0
        trials = 4000
        for seed in range(trials):
            cs = popularity_sample(query(true_dst=0, ordinal=seed), counts, cfg)
            hits += cs.candidates[0] == 1
        assert abs(hits / trials - 100 / 101) < 0.02

    def test_equal_counts_indistinguishable_from_uniform(self):
        # chi-square goodness of fit against the uniform expectation
        counts = np.zeros(6)
        counts[1:] = 3  # support {1..5}, true_dst=0 excluded
        cfg = SamplerConfig("popularity", n_s=1)
        freq = Counter()
        trials = 5000
        for seed in range(trials):
            cs = popularity_sample(query(true_dst=0, ordinal=seed), counts, cfg)
            freq[int(cs.candidates[0])] += 1
        expected = trials / 5
        chi2 = sum((freq[i] - expected) ** 2 / expected for i in range(1, 6))
        assert chi2 < CHI2_999[4]

    def test_exhausted_support_without_padding(self):
        counts = np.zeros(5)
        counts[3] = 2
        cfg = SamplerConfig("popularity", n_s=1, pad_with_uniform=False)
        with pytest.raises(ValueError, match="padding is disabled"):
            popularity_sample(query(true_dst=3), counts, cfg)

    def test_without_replacement_and_provenance(self):
        counts = np.zeros(10)
        counts[[2, 4, 6, 8]] = [1, 5, 2, 9]
        cfg = SamplerConfig("popularity", n_s=4, pad_with_uniform=False)
        cs = popularity_sample(query(true_dst=0, ordinal=3), counts, cfg)
        assert sorted(cs.candidates) == [2, 4, 6, 8]


class TestSharedFixed:
    def test_whole_universe(self):
        cfg = SamplerConfig("shared_fixed", n_s=9, seed=4)
        cs = shared_fixed_sample(9, cfg)
        assert sorted(cs.candidates) == list(range(9))
        assert cs.query_ref == SHARED

    def test_same_seed_identical(self):
        cfg = SamplerConfig("shared_fixed", n_s=5, seed=4)
        a, b = shared_fixed_sample(100, cfg), shared_fixed_sample(100, cfg)
        assert np.array_equal(a.candidates, b.candidates)

    def test_oversized_request(self):
        with pytest.raises(ValueError, match="universe"):
            shared_fixed_sample(5, SamplerConfig("shared_fixed", n_s=6, seed=4))


def _strategy_draw(strategy, q, cfg):
    if strategy == "uniform":
        return uniform_sample(q, 60, cfg)
    if strategy == "historical":
        return historical_sample(q, {q.src: np.array([5, 6, 7])}, 60, cfg)
    if strategy == "inductive":
        return inductive_sample(q, {q.src: np.array([8, 9])}, {}, 60, cfg)
    counts = np.zeros(60)
    counts[10:20] = np.arange(1, 11)
    return popularity_sample(q, counts, cfg)


@pytest.mark.parametrize("strategy", ["uniform", "historical", "inductive", "popularity"])
def test_common_invariants(strategy):
    rng = np.random.default_rng(17)
    for trial in range(30):
        n_s = int(rng.integers(1, 12))
        true_dst = int(rng.integers(0, 60))
        filt = set(int(x) for x in rng.choice(60, size=3, replace=False)) - {true_dst}
        mode = "filtered" if trial % 2 else "raw"
        q = query(src=int(rng.integers(0, 4)), true_dst=true_dst, filter_set=filt, ordinal=trial)
        cfg = SamplerConfig(strategy, n_s=n_s, seed=23, collision_mode=mode)
        cs = _strategy_draw(strategy, q, cfg)
        again = _strategy_draw(strategy, q, cfg)
        assert np.array_equal(cs.candidates, again.candidates), "deterministic under fixed seed"
        assert len(cs.candidates) == n_s, "padding keeps |candidates| = n_s"
        assert len(set(cs.candidates.tolist())) == n_s, "distinct"
        assert true_dst not in cs.candidates
        if mode == "filtered":
            assert not set(cs.candidates.tolist()) & filt


def test_historical_provenance_of_unpadded_candidates():
    # every non-padded candidate must come from the claimed pool
    rng = np.random.default_rng(31)
    for trial in range(25):
        pool = np.array(sorted(rng.choice(40, size=int(rng.integers(2, 10)), replace=False)))
        q = query(true_dst=int(pool[0]), ordinal=trial)
        n_s = int(rng.integers(1, len(pool)))
        cfg = SamplerConfig("historical", n_s=n_s, seed=3, pad_with_uniform=False)
        cs = historical_sample(q, {q.src: pool}, 40, cfg)
        assert set(cs.candidates.tolist()) <= set(pool.tolist()) - {q.true_dst}


class TestBatchSampler:
    def test_rows_are_valid_samples(self):
        pool = np.arange(5, 55)
        rng = np.random.default_rng(2)
        out = uniform_sample_batch(pool, 8, 500, rng)
        assert out.shape == (500, 8)
        for row in out[:50]:
            assert len(set(row.tolist())) == 8
            assert set(row.tolist()) <= set(pool.tolist())

    def test_matches_uniform_subset_distribution(self):
        # all C(5,2)=10 subsets of a 5-pool equally likely
        pool = np.arange(5)
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([77])))
        out = uniform_sample_batch(pool, 2, 20_000, rng)
        freq = Counter(tuple(sorted(r)) for r in out.tolist())
        assert len(freq) == 10
        expected = 20_000 / 10
        chi2 = sum((c - expected) ** 2 / expected for c in freq.values())
        assert chi2 < CHI2_999[9]

    def test_dense_branch_matches_contract(self):
        pool = np.arange(10)
        rng = np.random.default_rng(8)
        out = uniform_sample_batch(pool, 9, 200, rng)  # n_s close to pool size
        for row in out:
            assert len(set(row.tolist())) == 9

    def test_oversized_request(self):
        with pytest.raises(ValueError, match="pool"):
            uniform_sample_batch(np.arange(4), 5, 10, np.random.default_rng(0))


def test_export_csv_schema():
    cfg = SamplerConfig("uniform", n_s=3, seed=1)
    sets = [uniform_sample(query(ordinal=i), 20, cfg) for i in range(2)]
    buf = io.StringIO()
    n = export_candidates_csv(sets, buf)
    lines = buf.getvalue().strip().split("\n")
    assert n == 2
    assert lines[0] == "query_ordinal,strategy,candidates"
    assert len(lines) == 3
    assert lines[1].startswith("0,uniform,")


def test_sampler_config_validation():
    with pytest.raises(ValueError, match="strategy"):
        SamplerConfig("nearest", n_s=5)
    with pytest.raises(ValueError, match="n_s"):
        SamplerConfig("uniform", n_s=0)
    with pytest.raises(ValueError, match="collision_mode"):
        SamplerConfig("uniform", n_s=5, collision_mode="both")
