"""Shipped desk-scale fixtures demonstrating the evaluation pathologies the
package exists to measure: metric-ordering flips under sampling, grouped
correlation reversal, pooled-vs-per-source divergence, and cross-sampler
ranking instability.
"""

from __future__ import annotations

from .generator import GenConfig
from .harness import ExperimentConfig, SimpsonReport, simpson_check
from .hypergeom import FlipReport, RankHistogram, ordering_flip_check
from .metrics import full_rank, per_source_auc, pooled_ap, pooled_roc_auc, rank_metrics
from .sampling import SamplerConfig


def simpson_groups() -> dict[str, list[tuple[float, float]]]:
    """Two tight upward-trending groups whose pooled correlation turns negative."""
    return {
        "G1": [(0.80, 0.75), (0.85, 0.80), (0.90, 0.85)],
        "G2": [(0.20, 0.90), (0.25, 0.92), (0.30, 0.94)],
    }


def run_simpson_demo() -> SimpsonReport:
    return simpson_check(simpson_groups())


def flip_histograms(n_universe: int = 1000) -> tuple[RankHistogram, RankHistogram]:
    """Scorer A always ranks the target 5th; scorer B nails 25% of queries and
    buries the rest. B wins on full MRR, A wins on expected sampled MRR."""
    hist_a = RankHistogram({5: 1.0}, N=n_universe)
    hist_b = RankHistogram({1: 0.25, 1000: 0.75}, N=n_universe)
    return hist_a, hist_b


def run_flip_demo(n_s: int = 10) -> FlipReport:
    hist_a, hist_b = flip_histograms()
    return ordering_flip_check(hist_a, hist_b, n_s)


def flip_curve_rows(max_n_s: int = 60) -> list[tuple[int, float, float]]:
    """(n_s, expected sampled MRR of A, of B) oracle table for external plotting."""
    from .hypergeom import expected_metric

    hist_a, hist_b = flip_histograms()
    return [
        (n, expected_metric(hist_a, n, "sampled-mrr"), expected_metric(hist_b, n, "sampled-mrr"))
        for n in range(1, min(max_n_s, hist_a.N) + 1)
    ]


def two_source_scores() -> list[tuple[str, float, int]]:
    """(source, score, label) rows for two sources with disjoint score bands:
    each source separates its own positives perfectly, but pooling ranks the
    first source's negatives above the second source's positives."""
    return [
        ("U1", 0.95, 1), ("U1", 0.90, 1), ("U1", 0.60, 0), ("U1", 0.50, 0),
        ("U2", 0.35, 1), ("U2", 0.30, 1), ("U2", 0.20, 0), ("U2", 0.10, 0),
    ]


def run_two_source_demo() -> dict:
    """Per-query filtered ranking vs pooled classification metrics on the
    two-source fixture."""
    rows = two_source_scores()
    by_source: dict[str, list[tuple[float, int]]] = {}
    for source, score, label in rows:
        by_source.setdefault(source, []).append((score, label))

    records = []
    for source, items in by_source.items():
        positives = [s for s, l in items if l]
        negatives = [s for s, l in items if not l]
        for target in positives:
            others = [s for s in positives if s != target] + negatives
            records.append(full_rank(target, others, filter_scores=[s for s in positives if s != target],
                                     tie_mode="mean", filter_mode="filtered"))
    ranking = rank_metrics(records, ks=(1,), which="full")
    per_source = per_source_auc(rows)
    return {
        "per_query_filtered_mrr": ranking.mrr,
        "per_source_macro_auc": per_source.macro_auc,
        "per_source": per_source.to_dict(),
        "pooled_roc_auc": pooled_roc_auc([(s, l) for _, s, l in rows]),
        "pooled_ap": pooled_ap([(s, l) for _, s, l in rows]),
        "ap_tie_policy": "pessimistic",
    }


def instability_config(jobs: int = 1) -> ExperimentConfig:
    """Mixed-repetition generated dataset on which the four heuristics' sampled
    MRR rankings disagree between uniform and historical negatives."""
    return ExperimentConfig(
        dataset=GenConfig(
            num_nodes=400,
            num_edges=12_000,
            source_exponent=1.4,
            dst_exponent=1.4,
            repeat_prob=0.5,
            seed=7,
        ),
        scorers=("local-recency", "local-popularity", "global-recency", "global-popularity"),
        samplers=(
            SamplerConfig(strategy="uniform", n_s=20),
            SamplerConfig(strategy="historical", n_s=20),
        ),
        seeds=(0, 1),
        ks=(1, 10),
        metrics=("sampled-mrr", "sampled-hits", "mr-hat", "auc-hat"),
        name="cross-sampler-instability-demo",
        jobs=jobs,
    )
