"""Rank metrics, estimators, and pooled classification metrics.

Derived expectations are recomputed in-test by independent oracles: pairwise
counting for ROC-AUC, rank-by-rank precision for AP, explicit tie-rank
averaging for ranks.
"""

import math

import numpy as np
import pytest

from tlpeval.metrics import (
    RankRecord,
    average_ranks,
    effective_k,
    full_rank,
    full_rank_from_universe,
    mr_hat,
    per_source_auc,
    pooled_ap,
    pooled_roc_auc,
    rank_metrics,
    sampled_rank,
)

# Figure-style fixture: two positives far above, two far below a negative band
FIXTURE = [(0.95, 1), (0.9, 1), (0.35, 1), (0.3, 1), (0.6, 0), (0.5, 0), (0.2, 0), (0.1, 0)]


def auc_pairwise_oracle(scored):
    """Count concordant positive-negative pairs, ties worth 1/2."""
    pos = [s for s, l in scored if l]
    neg = [s for s, l in scored if not l]
    wins = sum(1.0 if p > n else (0.5 if p == n else 0.0) for p in pos for n in neg)
    return wins / (len(pos) * len(neg))


def ap_oracle(scored):
    """Precision at each positive in descending order, negatives first on ties."""
    ordered = sorted(scored, key=lambda p: (-p[0], p[1]))
    precisions = []
    seen = 0
    for i, (_, label) in enumerate(ordered, start=1):
        if label:
            seen += 1
            precisions.append(seen / i)
    return sum(precisions) / len(precisions)


class TestFullRank:
    def test_strictly_highest(self):
        rec = full_rank(10.0, np.arange(10, dtype=float))
        assert rec.full_rank == 1.0

    def test_tied_with_four_mean_mode(self):
        # oracle: mean of ranks 1..5
        oracle = sum(range(1, 6)) / 5
        rec = full_rank(1.0, [1.0] * 4 + [0.0] * 6, tie_mode="mean")
        assert rec.full_rank == oracle == 3.0

    def test_filtering_removes_exactly_the_filter_hits(self):
        others = [2.0, 3.0, 0.5, 0.1]
        raw = full_rank(1.0, others, filter_scores=[2.0, 3.0], filter_mode="raw")
        filt = full_rank(1.0, others, filter_scores=[2.0, 3.0], filter_mode="filtered")
        assert raw.full_rank - filt.full_rank == 2.0
        assert raw.N - filt.N == 2

    def test_tie_mode_ordering_property(self):
        rng = np.random.default_rng(21)
        for _ in range(100):
            others = rng.integers(0, 5, size=12).astype(float)
            target = float(rng.integers(0, 5))
            opt = full_rank(target, others, tie_mode="optimistic").full_rank
            mean = full_rank(target, others, tie_mode="mean").full_rank
            pes = full_rank(target, others, tie_mode="pessimistic").full_rank
            assert opt <= mean <= pes

    def test_universe_variant_matches(self):
        rng = np.random.default_rng(33)
        for _ in range(50):
            scores = rng.integers(0, 6, size=15).astype(float)
            true_dst = int(rng.integers(0, 15))
            filter_ids = [i for i in rng.choice(15, size=3, replace=False) if i != true_dst]
            for mode in ("raw", "filtered"):
                via_universe = full_rank_from_universe(scores, true_dst, filter_ids, "mean", mode)
                others = np.delete(scores, true_dst)
                fscores = scores[filter_ids]
                direct = full_rank(scores[true_dst], others, fscores, "mean", mode)
                assert via_universe.full_rank == direct.full_rank
                assert via_universe.N == direct.N


class TestSampledRank:
    def test_above_all(self):
        rec = sampled_rank(5.0, np.arange(10, dtype=float) / 10)
        assert rec.sampled_rank == 1.0 and rec.n_s == 10

    def test_below_all(self):
        rec = sampled_rank(-1.0, np.arange(7, dtype=float))
        assert rec.sampled_rank == 8.0

    def test_two_ties_mean(self):
        # oracle: mean of ranks 1..3
        assert sampled_rank(1.0, [1.0, 1.0], tie_mode="mean").sampled_rank == sum(range(1, 4)) / 3

    def test_empty_candidates(self):
        with pytest.raises(ValueError, match="empty"):
            sampled_rank(1.0, [])

    def test_whole_pool_equals_full_rank(self):
        # oracle equivalence: sampling everything reproduces the full rank
        rng = np.random.default_rng(6)
        for _ in range(50):
            scores = rng.integers(0, 8, size=20).astype(float)
            true_dst = int(rng.integers(0, 20))
            others = np.delete(scores, true_dst)
            full = full_rank(scores[true_dst], others)
            samp = sampled_rank(scores[true_dst], others)
            assert samp.sampled_rank == full.full_rank


class TestMrHat:
    def test_top_rank(self):
        assert mr_hat(RankRecord(sampled_rank=1.0, n_s=10, N=999)) == (1.0, 1.0)

    def test_formula_case(self):
        est, auc = mr_hat(RankRecord(sampled_rank=3.0, n_s=10, N=999))
        assert est == pytest.approx(1 + 99.9 * 2)
        assert auc == pytest.approx(0.8)

    def test_bottom_rank(self):
        est, auc = mr_hat(RankRecord(sampled_rank=11.0, n_s=10, N=999))
        assert est == pytest.approx(1000.0)
        assert auc == pytest.approx(0.0)

    def test_zero_sample_size(self):
        with pytest.raises(ValueError, match="n_s"):
            mr_hat(RankRecord(sampled_rank=1.0, n_s=0, N=10))

    def test_small_scale_unbiasedness(self):
        # empirical mean of the estimate converges to the true full rank
        N, n_s, R, m = 50, 5, 17, 40_000
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([13])))
        ids = np.argpartition(rng.random((m, N)), n_s - 1, axis=1)[:, :n_s]
        x = (ids < R - 1).sum(axis=1)
        est = 1.0 + (N / n_s) * x
        se = est.std(ddof=1) / math.sqrt(m)
        assert abs(est.mean() - R) <= 3 * se

    def test_auc_hat_linearity(self):
        # averaging auc_hat equals auc_hat of the averaged normalized rank, exactly
        rng = np.random.default_rng(3)
        records = [
            RankRecord(sampled_rank=float(rng.integers(1, 21)), n_s=20, N=500) for _ in range(200)
        ]
        summary = rank_metrics(records, ks=(1,), which="sampled")
        mean_norm = math.fsum((r.sampled_rank - 1.0) / r.n_s for r in records) / len(records)
        assert summary.auc_hat == 1.0 - mean_norm


class TestEffectiveK:
    def test_ratio(self):
        assert effective_k(10_000, 100, 1) == 100.0

    def test_identity_when_sampling_everything(self):
        assert effective_k(512, 512, 7) == 7.0

    def test_fractional(self):
        assert effective_k(999, 10, 3) == pytest.approx(299.7)

    def test_bad_sample_size(self):
        with pytest.raises(ValueError):
            effective_k(100, 0, 1)


class TestRankMetrics:
    def test_perfect(self):
        recs = [RankRecord(sampled_rank=1.0) for _ in range(3)]
        s = rank_metrics(recs, ks=(1,), which="sampled")
        assert s.mrr == 1.0 and s.hits[1] == 1.0

    def test_arithmetic(self):
        recs = [RankRecord(sampled_rank=r) for r in (1.0, 2.0, 4.0)]
        s = rank_metrics(recs, ks=(1, 3), which="sampled")
        assert s.mrr == pytest.approx((1 + 0.5 + 0.25) / 3)
        assert s.mean_rank == pytest.approx(7 / 3)
        assert s.hits == {1: 1 / 3, 3: 2 / 3}

    def test_miss_at_k(self):
        s = rank_metrics([RankRecord(sampled_rank=2.0)], ks=(1,), which="sampled")
        assert s.hits[1] == 0.0

    def test_empty_input(self):
        with pytest.raises(ValueError, match="no rank"):
            rank_metrics([], ks=(1,), which="sampled")

    def test_missing_rank(self):
        with pytest.raises(ValueError, match="missing"):
            rank_metrics([RankRecord(full_rank=1.0, N=10)], ks=(1,), which="sampled")

    def test_full_summary_carries_exact_estimates(self):
        recs = [RankRecord(full_rank=float(r), N=9) for r in (1, 5, 10)]
        s = rank_metrics(recs, ks=(1,), which="full")
        assert s.mr_hat == s.mean_rank
        assert s.auc_hat == pytest.approx(sum(1 - (r - 1) / 9 for r in (1, 5, 10)) / 3)

    def test_summary_rows_schema(self):
        s = rank_metrics([RankRecord(sampled_rank=2.0, n_s=4, N=40)], ks=(1, 2), which="sampled")
        rows = s.to_rows()
        assert [r[0] for r in rows] == ["mrr", "mean_rank", "hits", "hits", "mr_hat", "auc_hat"]
        assert all(r[3] == 1 for r in rows)


class TestPooledRocAuc:
    def test_fixture_three_quarters(self):
        assert pooled_roc_auc(FIXTURE) == auc_pairwise_oracle(FIXTURE) == 0.75

    def test_perfect_separation(self):
        assert pooled_roc_auc([(2.0, 1), (1.5, 1), (1.0, 0), (0.5, 0)]) == 1.0

    def test_tie_symmetry(self):
        assert pooled_roc_auc([(0.5, 1), (0.5, 0)]) == 0.5

    def test_single_class_rejected(self):
        with pytest.raises(ValueError, match="positive"):
            pooled_roc_auc([(0.5, 1), (0.4, 1)])

    def test_monotone_transform_invariance(self):
        rng = np.random.default_rng(12)
        for _ in range(30):
            scored = [(float(s), int(l)) for s, l in zip(rng.normal(size=20), rng.integers(0, 2, 20))]
            if not (any(l for _, l in scored) and any(not l for _, l in scored)):
                continue
            base = pooled_roc_auc(scored)
            warped = [(math.exp(3 * s) + 1, l) for s, l in scored]
            assert pooled_roc_auc(warped) == pytest.approx(base)
            assert base == pytest.approx(auc_pairwise_oracle(scored))


class TestPooledAp:
    def test_fixture_value(self):
        oracle = ap_oracle(FIXTURE)
        assert oracle == pytest.approx((1 + 1 + 3 / 5 + 4 / 6) / 4)
        assert pooled_ap(FIXTURE) == pytest.approx(oracle)
        assert pooled_ap(FIXTURE) == pytest.approx(0.816667, abs=1e-6)

    def test_perfect_separation(self):
        assert pooled_ap([(2.0, 1), (1.5, 1), (1.0, 0)]) == 1.0

    def test_single_positive_ranked_last(self):
        m = 6
        scored = [(float(i), 0) for i in range(1, m + 1)] + [(0.0, 1)]
        assert pooled_ap(scored) == pytest.approx(1 / (m + 1))

    def test_pessimistic_ties(self):
        # positive and negative with equal score: negative sorts first
        assert pooled_ap([(1.0, 1), (1.0, 0)]) == 0.5

    def test_no_positives(self):
        with pytest.raises(ValueError, match="positive"):
            pooled_ap([(0.5, 0)])


class TestPerSourceAuc:
    GROUPED = [("U1", s, l) for s, l in FIXTURE[:2] + FIXTURE[4:6]] + [
        ("U2", s, l) for s, l in FIXTURE[2:4] + FIXTURE[6:8]
    ]

    def test_macro_perfect_but_pooled_depressed(self):
        res = per_source_auc(self.GROUPED)
        assert res.per_source == {"U1": 1.0, "U2": 1.0}
        assert res.macro_auc == 1.0
        pooled = pooled_roc_auc([(s, l) for _, s, l in self.GROUPED])
        assert res.macro_auc - pooled == pytest.approx(0.25)

    def test_one_sided_group_excluded(self):
        rows = self.GROUPED + [("U3", 0.7, 1)]
        res = per_source_auc(rows)
        assert res.excluded == 1
        assert set(res.per_source) == {"U1", "U2"}

    def test_zero_includable_groups(self):
        with pytest.raises(ValueError, match="source group"):
            per_source_auc([("U1", 0.5, 1), ("U2", 0.4, 0)])


def test_average_ranks_tie_handling():
    ranks = average_ranks(np.array([3.0, 1.0, 3.0, 2.0]))
    assert ranks.tolist() == [3.5, 1.0, 3.5, 2.0]


def test_rank_record_validation():
    with pytest.raises(ValueError, match="tie_mode"):
        RankRecord(tie_mode="sloppy")
    with pytest.raises(ValueError, match="outside"):
        RankRecord(full_rank=12.0, N=10)
    with pytest.raises(ValueError, match="outside"):
        RankRecord(sampled_rank=7.0, n_s=5)
