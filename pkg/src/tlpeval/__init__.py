"""tlpeval: evaluation engine for temporal link prediction.

Measures which ranking protocols are statistically sound: full vs sampled
ranking metrics, consistent mean-rank/AUC estimators, hard-negative samplers,
scalable heuristic baselines, exact hypergeometric oracles, and an experiment
harness with deterministic, byte-stable reports.
"""

from ._version import __version__
from .dataset import (
    Dataset,
    Query,
    Splits,
    TemporalEdge,
    build_queries,
    chronological_split,
    ingest_csv,
    load_dataset,
    surprise_index,
)
from .generator import GenConfig, calibrate_surprise, generate
from .harness import (
    ExperimentConfig,
    ReportMatrix,
    SimpsonReport,
    pearson,
    run_matrix,
    simpson_check,
    spearman,
)
from .hypergeom import (
    FlipReport,
    RankHistogram,
    expected_metric,
    expected_sampled_hits,
    expected_sampled_mrr,
    hypergeom_pmf,
    ordering_flip_check,
)
from .metrics import (
    MetricSummary,
    PerSourceAuc,
    RankRecord,
    effective_k,
    full_rank,
    mr_hat,
    per_source_auc,
    pooled_ap,
    pooled_roc_auc,
    rank_metrics,
    sampled_rank,
)
from .report import load_report, report_from_dict, report_to_dict, save_report
from .sampling import (
    CandidateSet,
    SamplerConfig,
    historical_sample,
    inductive_sample,
    popularity_sample,
    shared_fixed_sample,
    uniform_sample,
)
from .scorers import HeuristicScorer, InjectedScores, fit_scorer

__all__ = [
    "__version__",
    "Dataset", "Query", "Splits", "TemporalEdge",
    "build_queries", "chronological_split", "ingest_csv", "load_dataset", "surprise_index",
    "GenConfig", "calibrate_surprise", "generate",
    "ExperimentConfig", "ReportMatrix", "SimpsonReport",
    "pearson", "run_matrix", "simpson_check", "spearman",
    "FlipReport", "RankHistogram",
    "expected_metric", "expected_sampled_hits", "expected_sampled_mrr",
    "hypergeom_pmf", "ordering_flip_check",
    "MetricSummary", "PerSourceAuc", "RankRecord",
    "effective_k", "full_rank", "mr_hat", "per_source_auc",
    "pooled_ap", "pooled_roc_auc", "rank_metrics", "sampled_rank",
    "load_report", "report_from_dict", "report_to_dict", "save_report",
    "CandidateSet", "SamplerConfig",
    "historical_sample", "inductive_sample", "popularity_sample",
    "shared_fixed_sample", "uniform_sample",
    "HeuristicScorer", "InjectedScores", "fit_scorer",
]
