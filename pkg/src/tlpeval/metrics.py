"""Rank and classification metrics, plus the consistent sampled-rank estimators.

Rank conventions: rank 1 is best. Ties contribute 0 (optimistic), all
(pessimistic) or half (mean, the default: the only mode whose expectation
matches random tie-breaking). "raw" ranking counts every non-target entity as a
negative, including other true destinations; "filtered" removes the filter set
from the competitor pool and reduces the universe size accordingly.

Aggregate means use math.fsum, so results do not depend on partition order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

TIE_MODES = ("optimistic", "mean", "pessimistic")
FILTER_MODES = ("raw", "filtered")


@dataclass(frozen=True)
class RankRecord:
    """Per-query rank outcome; holds whichever of full/sampled rank was computed.

    N is the number of universe negatives (|V|-1, reduced by the filter-set size
    in filtered mode); n_s the effective sampled-candidate count after collision
    removal.
    """

    full_rank: float | None = None
    sampled_rank: float | None = None
    n_s: int | None = None
    N: int | None = None
    tie_mode: str = "mean"
    filter_mode: str = "raw"

    def __post_init__(self):
        if self.tie_mode not in TIE_MODES:
            raise ValueError(f"unknown tie_mode {self.tie_mode!r}")
        if self.filter_mode not in FILTER_MODES:
            raise ValueError(f"unknown filter_mode {self.filter_mode!r}")
        if self.full_rank is not None and self.N is not None and not (1 <= self.full_rank <= self.N + 1):
            raise ValueError(f"full rank {self.full_rank} outside [1, N+1]={self.N + 1}")
        if self.sampled_rank is not None and self.n_s is not None and not (1 <= self.sampled_rank <= self.n_s + 1):
            raise ValueError(f"sampled rank {self.sampled_rank} outside [1, n_s+1]={self.n_s + 1}")


@dataclass(frozen=True)
class MetricSummary:
    mrr: float
    mean_rank: float
    hits: dict[int, float]
    auc_hat: float | None
    mr_hat: float | None
    count: int

    def to_dict(self) -> dict:
        return {
            "mrr": self.mrr,
            "mean_rank": self.mean_rank,
            "hits": {str(k): v for k, v in sorted(self.hits.items())},
            "auc_hat": self.auc_hat,
            "mr_hat": self.mr_hat,
            "count": self.count,
        }

    def to_rows(self) -> list[tuple[str, str, float, int]]:
        """Long-format rows (metric, K, value, count)."""
        rows = [("mrr", "", self.mrr, self.count), ("mean_rank", "", self.mean_rank, self.count)]
        for k in sorted(self.hits):
            rows.append(("hits", str(k), self.hits[k], self.count))
        if self.mr_hat is not None:
            rows.append(("mr_hat", "", self.mr_hat, self.count))
        if self.auc_hat is not None:
            rows.append(("auc_hat", "", self.auc_hat, self.count))
        return rows


def _tie_adjust(n_equal: float, tie_mode: str) -> float:
    if tie_mode == "optimistic":
        return 0.0
    if tie_mode == "pessimistic":
        return float(n_equal)
    return n_equal / 2.0


def full_rank(
    target_score: float,
    other_scores: np.ndarray,
    filter_scores: Sequence[float] = (),
    tie_mode: str = "mean",
    filter_mode: str = "raw",
) -> RankRecord:
    """Rank of the target among all universe competitors.

    `other_scores` covers V minus the true destination; `filter_scores` are the
    scores of the filter-set members (a subset of other_scores), subtracted from
    the counts in filtered mode.
    """
    other = np.asarray(other_scores, dtype=np.float64)
    better = int((other > target_score).sum())
    equal = int((other == target_score).sum())
    n = len(other)
    if filter_mode == "filtered" and len(filter_scores) > 0:
        filt = np.asarray(filter_scores, dtype=np.float64)
        better -= int((filt > target_score).sum())
        equal -= int((filt == target_score).sum())
        n -= len(filt)
    rank = 1.0 + better + _tie_adjust(equal, tie_mode)
    return RankRecord(full_rank=rank, N=n, tie_mode=tie_mode, filter_mode=filter_mode)


def full_rank_from_universe(
    scores: np.ndarray,
    true_dst: int,
    filter_ids: np.ndarray | Sequence[int] = (),
    tie_mode: str = "mean",
    filter_mode: str = "raw",
) -> RankRecord:
    """full_rank over a complete universe score array (scores[true_dst] is the target)."""
    scores = np.asarray(scores, dtype=np.float64)
    t = scores[true_dst]
    better = int((scores > t).sum())
    equal = int((scores == t).sum()) - 1  # the target itself
    n = len(scores) - 1
    if filter_mode == "filtered" and len(filter_ids) > 0:
        fs = scores[np.asarray(filter_ids, dtype=np.int64)]
        better -= int((fs > t).sum())
        equal -= int((fs == t).sum())
        n -= len(fs)
    rank = 1.0 + better + _tie_adjust(equal, tie_mode)
    return RankRecord(full_rank=rank, N=n, tie_mode=tie_mode, filter_mode=filter_mode)


def sampled_rank(
    target_score: float,
    candidate_scores: np.ndarray,
    tie_mode: str = "mean",
    n_universe: int | None = None,
    filter_mode: str = "raw",
) -> RankRecord:
    """Rank of the target among sampled candidates only (collisions already removed)."""
    cand = np.asarray(candidate_scores, dtype=np.float64)
    if len(cand) == 0:
        raise ValueError("empty candidate set")
    better = int((cand > target_score).sum())
    equal = int((cand == target_score).sum())
    rank = 1.0 + better + _tie_adjust(equal, tie_mode)
    return RankRecord(
        sampled_rank=rank, n_s=len(cand), N=n_universe, tie_mode=tie_mode, filter_mode=filter_mode
    )


def mr_hat(rec: RankRecord) -> tuple[float, float]:
    """Consistent estimate of the full rank from a sampled rank.

    Returns (estimated_full_rank, auc_hat) with
    estimate = 1 + (N / n_s) * (sampled_rank - 1) and auc_hat = 1 - (estimate-1)/N.
    Unbiased for tie-free scores under uniform sampling without replacement;
    callers using non-uniform candidates should flag the estimate as biased.
    """
    if rec.sampled_rank is None:
        raise ValueError("record has no sampled rank")
    if not rec.n_s:
        raise ValueError("n_s must be >= 1")
    if rec.N is None or rec.N < rec.n_s:
        raise ValueError(f"invalid universe size N={rec.N} for n_s={rec.n_s}")
    est = 1.0 + (rec.N / rec.n_s) * (rec.sampled_rank - 1.0)
    return est, 1.0 - (est - 1.0) / rec.N


def effective_k(N: int, n_s: int, K: int) -> float:
    """Sampled Hits@K estimates full Hits@(C*K) with C = N/n_s; returns C*K."""
    if n_s < 1:
        raise ValueError("n_s must be >= 1")
    return (N / n_s) * K


def rank_metrics(records: Sequence[RankRecord], ks: Iterable[int], which: str = "sampled") -> MetricSummary:
    """Aggregate MRR, mean rank, Hits@K and (when possible) mean estimator values.

    which selects the rank used: "full" or "sampled". For sampled records with a
    known universe size the summary also carries the mean mr_hat / auc_hat
    estimates; for full records those fields hold the exact mean rank and
    full-ranking AUC.
    """
    if which not in ("full", "sampled"):
        raise ValueError(f"which must be 'full' or 'sampled', got {which!r}")
    if len(records) == 0:
        raise ValueError("no rank records")
    ranks = []
    for rec in records:
        r = rec.full_rank if which == "full" else rec.sampled_rank
        if r is None:
            raise ValueError(f"record missing {which} rank")
        ranks.append(r)
    n = len(ranks)
    mrr = math.fsum(1.0 / r for r in ranks) / n
    mean_rank = math.fsum(ranks) / n
    hits = {int(k): sum(1 for r in ranks if r <= k) / n for k in ks}

    est_mean = auc_mean = None
    if which == "full":
        if all(rec.N is not None for rec in records):
            est_mean = mean_rank
            auc_mean = math.fsum(1.0 - (rec.full_rank - 1.0) / rec.N for rec in records) / n
    elif all(rec.N is not None and rec.n_s for rec in records):
        pairs = [mr_hat(rec) for rec in records]
        est_mean = math.fsum(p[0] for p in pairs) / n
        auc_mean = math.fsum(p[1] for p in pairs) / n
    return MetricSummary(mrr=mrr, mean_rank=mean_rank, hits=hits, auc_hat=auc_mean, mr_hat=est_mean, count=n)


def average_ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks of `values` in ascending order, ties averaged (fractional ranking)."""
    values = np.asarray(values, dtype=np.float64)
    _, inverse, counts = np.unique(values, return_inverse=True, return_counts=True)
    ends = np.cumsum(counts)
    starts = ends - counts + 1
    return ((starts + ends) / 2.0)[inverse]


def pooled_roc_auc(scored: Iterable[tuple[float, int]]) -> float:
    """Probability a random positive outranks a random negative, ties at 1/2
    (Mann-Whitney formulation)."""
    pairs = list(scored)
    scores = np.asarray([p[0] for p in pairs], dtype=np.float64)
    labels = np.asarray([1 if p[1] else 0 for p in pairs], dtype=bool)
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("pooled ROC-AUC needs at least one positive and one negative")
    ranks = average_ranks(scores)
    return (math.fsum(ranks[labels]) - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def pooled_ap(scored: Iterable[tuple[float, int]]) -> float:
    """Average precision over the descending-score ordering.

    Score ties are broken pessimistically (negatives ahead of positives); report
    metadata should record that policy alongside the value.
    """
    pairs = [(float(s), 1 if l else 0) for s, l in scored]
    n_pos = sum(l for _, l in pairs)
    if n_pos == 0:
        raise ValueError("average precision needs at least one positive")
    ordered = sorted(pairs, key=lambda p: (-p[0], p[1]))
    seen_pos = 0
    total = 0.0
    for pos_idx, (_, label) in enumerate(ordered, start=1):
        if label:
            seen_pos += 1
            total += seen_pos / pos_idx
    return total / n_pos


@dataclass(frozen=True)
class PerSourceAuc:
    macro_auc: float
    per_source: dict
    excluded: int

    def to_dict(self) -> dict:
        return {
            "macro_auc": self.macro_auc,
            "per_source": {str(k): v for k, v in self.per_source.items()},
            "excluded": self.excluded,
        }


def per_source_auc(scored: Iterable[tuple[object, float, int]]) -> PerSourceAuc:
    """ROC-AUC within each source group, macro-averaged (unweighted).

    Groups lacking a positive or a negative are excluded and counted, not
    errors; zero includable groups is an error.
    """
    groups: dict[object, list[tuple[float, int]]] = {}
    for source, score, label in scored:
        groups.setdefault(source, []).append((float(score), 1 if label else 0))
    per: dict = {}
    excluded = 0
    for source, rows in groups.items():
        labels = {l for _, l in rows}
        if labels != {0, 1}:
            excluded += 1
            continue
        per[source] = pooled_roc_auc(rows)
    if not per:
        raise ValueError("no source group has both a positive and a negative")
    macro = math.fsum(per.values()) / len(per)
    return PerSourceAuc(macro_auc=macro, per_source=per, excluded=excluded)
