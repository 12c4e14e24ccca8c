"""Acceptance suite: one test per release criterion, each printing a PASS/FAIL
line (visible with `pytest -s tests/test_acceptance.py`).

The criteria pin exact oracle values, statistical tolerances (3 standard
errors), and wall-clock budgets. All randomness is seeded, so outcomes are
reproducible run to run.
"""

import itertools
import math
import subprocess
import sys
import time
from contextlib import contextmanager

import numpy as np
import pytest

from tlpeval.dataset import chronological_split, surprise_index
from tlpeval.demos import (
    instability_config,
    run_flip_demo,
    run_simpson_demo,
    run_two_source_demo,
)
from tlpeval.generator import GenConfig, calibrate_surprise, generate
from tlpeval.harness import run_matrix
from tlpeval.hypergeom import expected_sampled_hits, expected_sampled_mrr
from tlpeval.sampling import uniform_sample_batch


@contextmanager
def criterion(name):
    start = time.monotonic()
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE {name}: FAIL ({time.monotonic() - start:.1f}s)")
        raise
    print(f"ACCEPTANCE {name}: PASS ({time.monotonic() - start:.1f}s)")


class MrHatRun:
    """Shared Monte Carlo: 200 queries over |V|=1000, 10^4 uniform samplings each."""

    N = 999  # universe negatives, |V| - 1
    N_S = 20
    M = 10_000
    NUM_QUERIES = 200

    def __init__(self):
        start = time.monotonic()
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([2024])))
        self.true_ranks = rng.integers(1, self.N + 2, size=self.NUM_QUERIES)
        pool = np.arange(self.N)
        means = np.empty(self.NUM_QUERIES)
        variances = np.empty(self.NUM_QUERIES)
        auc_means = np.empty(self.NUM_QUERIES)
        for j, rank in enumerate(self.true_ranks):
            ids = uniform_sample_batch(pool, self.N_S, self.M, rng)
            # negatives 0..R-2 outrank the target, so the sampled rank is 1 + hits
            sampled_rank = 1.0 + (ids < rank - 1).sum(axis=1)
            estimate = 1.0 + (self.N / self.N_S) * (sampled_rank - 1.0)
            means[j] = estimate.mean()
            variances[j] = estimate.var(ddof=1)
            auc_means[j] = (1.0 - (estimate - 1.0) / self.N).mean()
        self.estimated_mean_rank = means.mean()
        self.mean_rank_se = math.sqrt(variances.sum() / self.M) / self.NUM_QUERIES
        self.estimated_auc = auc_means.mean()
        self.true_mean_rank = self.true_ranks.mean()
        self.true_auc = (1.0 - (self.true_ranks - 1.0) / self.N).mean()
        self.duration = time.monotonic() - start


@pytest.fixture(scope="module")
def mr_hat_run():
    return MrHatRun()


def test_mr_hat_unbiasedness(mr_hat_run):
    with criterion("MR-hat unbiasedness"):
        r = mr_hat_run
        assert r.duration < 30.0
        assert abs(r.estimated_mean_rank - r.true_mean_rank) <= 3 * r.mean_rank_se
        assert abs(r.estimated_mean_rank - r.true_mean_rank) / r.true_mean_rank < 0.01


def test_auc_hat_consistency(mr_hat_run):
    with criterion("auc-hat consistency"):
        r = mr_hat_run
        assert r.duration < 30.0
        assert abs(r.estimated_auc - r.true_auc) < 0.005


def test_sampled_mrr_inconsistency_witness():
    with criterion("sampled-MRR inconsistency witness"):
        start = time.monotonic()
        report = run_flip_demo(n_s=10)
        # exact oracle: B wins the full metric, A wins the sampled expectation
        assert report.full_mrr_b > report.full_mrr_a
        assert report.expected_sampled_mrr_a > report.expected_sampled_mrr_b
        assert report.flip is True

        # Monte Carlo confirmation, 10^5 draws per scorer, 3 standard errors
        m, n_s, pool_size = 100_000, 10, 1000
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([77])))
        draws = uniform_sample_batch(np.arange(pool_size), n_s, m, rng)
        mc_a = 1.0 / (1.0 + (draws < 5 - 1).sum(axis=1))
        ranks_b = np.where(rng.random(m) < 0.25, 1, 1000)
        draws_b = uniform_sample_batch(np.arange(pool_size), n_s, m, rng)
        mc_b = 1.0 / (1.0 + (draws_b < (ranks_b - 1)[:, None]).sum(axis=1))
        se_a = mc_a.std(ddof=1) / math.sqrt(m)
        se_b = mc_b.std(ddof=1) / math.sqrt(m)
        assert abs(mc_a.mean() - report.expected_sampled_mrr_a) <= 3 * se_a
        assert abs(mc_b.mean() - report.expected_sampled_mrr_b) <= 3 * se_b
        assert mc_a.mean() > mc_b.mean()
        assert time.monotonic() - start < 10.0


def test_hits_at_ck_relation():
    with criterion("Hits@C*K relation"):
        start = time.monotonic()
        N, n_s, K = 10_000, 100, 1
        C = N / n_s
        full_cutoff = math.ceil(C * K)
        assert full_cutoff == 100
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([31])))
        worst = 0.0
        for _ in range(50):
            support = rng.choice(np.arange(1, N + 2), size=200, replace=False)
            weights = rng.dirichlet(np.ones(len(support)))
            expected = math.fsum(
                w * expected_sampled_hits(int(r), N, n_s, K) for r, w in zip(support, weights)
            )
            full = math.fsum(w for r, w in zip(support, weights) if r <= full_cutoff)
            worst = max(worst, abs(expected - full))
        assert worst <= 0.02
        assert time.monotonic() - start < 30.0


def test_two_source_pooled_vs_per_query():
    with criterion("two-source pooled-vs-per-query reproduction"):
        result = run_two_source_demo()
        assert result["per_query_filtered_mrr"] == 1.0
        assert result["per_source_macro_auc"] == 1.0
        assert result["pooled_roc_auc"] == 0.75
        assert result["pooled_ap"] == pytest.approx(0.816667, abs=1e-6)


def test_simpson_fixture():
    with criterion("grouped-correlation (Simpson) fixture"):
        report = run_simpson_demo()
        assert report.within["G1"] == pytest.approx(1.0, abs=1e-9)
        assert report.within["G2"] == pytest.approx(1.0, abs=1e-9)
        assert report.pooled_r < -0.3
        assert report.paradox is True


def test_surprise_calibration_at_default_scale():
    with criterion("surprise-index calibration"):
        start = time.monotonic()
        calibrated = calibrate_surprise(GenConfig(), 0.987)
        d = generate(calibrated)
        measured = surprise_index(d, chronological_split(d, (0.7, 0.15, 0.15)))
        assert 0.977 <= measured <= 0.997
        assert time.monotonic() - start < 60.0


def test_oracle_matches_full_enumeration():
    with criterion("oracle/brute-force equivalence"):
        for N in range(1, 13):
            for n_s in range(1, N + 1):
                subsets = np.array(list(itertools.combinations(range(N), n_s)))
                for R in range(1, N + 2):
                    x = (subsets < R - 1).sum(axis=1)
                    brute_mrr = math.fsum(1.0 / (1.0 + xi) for xi in x) / len(subsets)
                    assert abs(expected_sampled_mrr(R, N, n_s) - brute_mrr) <= 1e-12
                    for K in range(1, n_s + 2):
                        brute_hits = (x <= K - 1).sum() / len(subsets)
                        assert abs(expected_sampled_hits(R, N, n_s, K) - brute_hits) <= 1e-12


def test_evaluate_determinism_across_jobs(tmp_path):
    with criterion("byte-identical evaluate runs"):
        gen = tmp_path / "gen.kv"
        gen.write_text(
            "num_nodes=150\nnum_edges=2500\nrepeat_prob=0.4\nseed=6\n", encoding="utf-8"
        )
        outputs = []
        for name, jobs in (("r1", "1"), ("r2", "1"), ("r3", "4")):
            out = tmp_path / name
            r = subprocess.run(
                [sys.executable, "-m", "tlpeval", "evaluate", "--gen-config", str(gen),
                 "--samplers", "uniform,historical", "--seeds", "0,1", "--n-s", "10",
                 "--jobs", jobs, "--out", str(out)],
                capture_output=True, text=True, timeout=300,
            )
            assert r.returncode == 0, r.stderr
            outputs.append(out)
        names = [p.name for p in sorted(outputs[0].glob("*")) if p.suffix in (".json", ".csv")]
        assert "report.json" in names and "report.csv" in names
        for name in names:
            first = (outputs[0] / name).read_bytes()
            assert first == (outputs[1] / name).read_bytes(), f"{name} differs across reruns"
            assert first == (outputs[2] / name).read_bytes(), f"{name} differs across --jobs"


def test_cross_sampler_ranking_instability():
    with criterion("cross-sampler ranking instability demo"):
        m = run_matrix(instability_config())
        rho = m.correlations[("uniform", "historical")]
        assert rho is not None
        assert rho < 1.0
