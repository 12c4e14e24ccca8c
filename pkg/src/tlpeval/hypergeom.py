"""Exact expectations of sampled ranking metrics via the hypergeometric law.

For a query with tie-free full rank R out of N universe negatives, the number X
of sampled negatives outranking the target under uniform sampling without
replacement is Hypergeometric(N, R-1, n_s). These closed forms let the test
suite and the flip demo certify consistency claims without Monte Carlo noise.

Small populations (N <= 30) use exact rational arithmetic; larger ones use
log-space binomial coefficients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

EXACT_LIMIT = 30


def _check_params(N: int, A: int, n: int) -> None:
    for label, v in (("N", N), ("A", A), ("n", n)):
        if int(v) != v:
            raise ValueError(f"{label} must be an integer, got {v!r}")
    if N < 0 or not (0 <= A <= N) or not (0 <= n <= N):
        raise ValueError(f"invalid hypergeometric parameters N={N}, A={A}, n={n}")


def _lchoose(a: int, b: int) -> float:
    return math.lgamma(a + 1) - math.lgamma(b + 1) - math.lgamma(a - b + 1)


def hypergeom_pmf(N: int, A: int, n: int, x: int) -> float:
    """P[X = x] for X ~ Hypergeometric(N, A, n); 0 outside the support."""
    _check_params(N, A, n)
    if int(x) != x:
        raise ValueError(f"x must be an integer, got {x!r}")
    x = int(x)
    if x < max(0, n - (N - A)) or x > min(A, n):
        return 0.0
    if N <= EXACT_LIMIT:
        return float(Fraction(math.comb(A, x) * math.comb(N - A, n - x), math.comb(N, n)))
    return math.exp(_lchoose(A, x) + _lchoose(N - A, n - x) - _lchoose(N, n))


def _support(N: int, A: int, n: int) -> range:
    return range(max(0, n - (N - A)), min(A, n) + 1)


def expected_sampled_mrr(R: int, N: int, n_s: int) -> float:
    """E[1 / (1 + X)] with X ~ Hypergeometric(N, R-1, n_s): the expected sampled
    reciprocal rank of a target whose tie-free full rank is R."""
    if int(R) != R or not (1 <= R <= N + 1):
        raise ValueError(f"full rank R={R!r} outside [1, N+1]=[1, {N + 1}]")
    A = int(R) - 1
    _check_params(N, A, n_s)
    return math.fsum(hypergeom_pmf(N, A, n_s, x) / (1.0 + x) for x in _support(N, A, n_s))


def expected_sampled_hits(R: int, N: int, n_s: int, K: int) -> float:
    """P[X <= K-1]: expected sampled Hits@K for a target with full rank R."""
    if K < 1:
        raise ValueError("K must be >= 1")
    if int(R) != R or not (1 <= R <= N + 1):
        raise ValueError(f"full rank R={R!r} outside [1, N+1]=[1, {N + 1}]")
    A = int(R) - 1
    _check_params(N, A, n_s)
    if K - 1 >= min(A, n_s):
        return 1.0  # K-1 covers the whole support; exact, skips log-space rounding
    return min(1.0, math.fsum(hypergeom_pmf(N, A, n_s, x) for x in _support(N, A, n_s) if x <= K - 1))


@dataclass(frozen=True)
class RankHistogram:
    """A scorer's induced distribution over tie-free full ranks 1..N+1."""

    masses: Mapping[int, float]
    N: int

    def __post_init__(self):
        if not self.masses:
            raise ValueError("empty histogram")
        for r, m in self.masses.items():
            if int(r) != r or not (1 <= r <= self.N + 1):
                raise ValueError(f"rank {r!r} outside [1, N+1]=[1, {self.N + 1}]")
            if m < 0:
                raise ValueError(f"negative mass {m!r} at rank {r}")
        total = math.fsum(self.masses.values())
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"histogram masses sum to {total!r}, not 1")
        object.__setattr__(self, "masses", {int(r): float(m) for r, m in self.masses.items()})

    def full_mrr(self) -> float:
        return math.fsum(m / r for r, m in self.masses.items())

    def mean_rank(self) -> float:
        return math.fsum(m * r for r, m in self.masses.items())

    def full_hits(self, K: int) -> float:
        return math.fsum(m for r, m in self.masses.items() if r <= K)


def expected_metric(hist: RankHistogram, n_s: int, metric: str) -> float:
    """Mass-weighted expectation of a sampled metric over a rank histogram.

    metric is one of "sampled-mrr", "sampled-hits@K" (K embedded, e.g.
    "sampled-hits@10"), "mr_hat", "auc_hat". mr_hat returns the exact mean rank
    (the estimator is unbiased), self-checked against the brute-force
    hypergeometric sum.
    """
    N = hist.N
    if metric == "sampled-mrr":
        return math.fsum(m * expected_sampled_mrr(r, N, n_s) for r, m in hist.masses.items())
    if metric.startswith("sampled-hits@"):
        k = int(metric.split("@", 1)[1])
        return math.fsum(m * expected_sampled_hits(r, N, n_s, k) for r, m in hist.masses.items())
    if metric == "mr_hat":
        exact = hist.mean_rank()
        brute = math.fsum(
            m * math.fsum(
                hypergeom_pmf(N, r - 1, n_s, x) * (1.0 + (N / n_s) * x)
                for x in _support(N, r - 1, n_s)
            )
            for r, m in hist.masses.items()
        )
        if abs(exact - brute) > 1e-9:
            raise AssertionError(f"mr_hat linearity self-check failed: {exact} vs {brute}")
        return exact
    if metric == "auc_hat":
        return math.fsum(m * (1.0 - (r - 1.0) / N) for r, m in hist.masses.items())
    raise ValueError(f"unknown metric {metric!r}")


def _order(a: float, b: float, higher_is_better: bool = True) -> str:
    if a == b:
        return "tie"
    if (a > b) == higher_is_better:
        return "A"
    return "B"


@dataclass(frozen=True)
class FlipReport:
    """Whether sampling reverses the full-metric ordering of two rank histograms."""

    N: int
    n_s: int
    full_mrr_a: float
    full_mrr_b: float
    expected_sampled_mrr_a: float
    expected_sampled_mrr_b: float
    mean_rank_a: float
    mean_rank_b: float
    expected_mr_hat_a: float
    expected_mr_hat_b: float
    full_mrr_order: str
    sampled_mrr_order: str
    mean_rank_order: str
    mr_hat_order: str
    flip: bool
    mr_hat_flip: bool

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "n_s": self.n_s,
            "full_mrr": {"A": self.full_mrr_a, "B": self.full_mrr_b},
            "expected_sampled_mrr": {"A": self.expected_sampled_mrr_a, "B": self.expected_sampled_mrr_b},
            "mean_rank": {"A": self.mean_rank_a, "B": self.mean_rank_b},
            "expected_mr_hat": {"A": self.expected_mr_hat_a, "B": self.expected_mr_hat_b},
            "full_mrr_order": self.full_mrr_order,
            "sampled_mrr_order": self.sampled_mrr_order,
            "mean_rank_order": self.mean_rank_order,
            "mr_hat_order": self.mr_hat_order,
            "flip": self.flip,
            "mr_hat_flip": self.mr_hat_flip,
        }


def ordering_flip_check(hist_a: RankHistogram, hist_b: RankHistogram, n_s: int) -> FlipReport:
    """Compare two scorers' orderings under the full metric vs its sampled expectation.

    flip is True when expected sampled MRR reverses the full-MRR ordering.
    The mr_hat ordering is also reported; being linear in the rank, it always
    agrees with the full mean-rank ordering, so mr_hat_flip must come out False.
    """
    if hist_a.N != hist_b.N:
        raise ValueError(f"histogram universe mismatch: {hist_a.N} vs {hist_b.N}")
    full_a, full_b = hist_a.full_mrr(), hist_b.full_mrr()
    samp_a = expected_metric(hist_a, n_s, "sampled-mrr")
    samp_b = expected_metric(hist_b, n_s, "sampled-mrr")
    mr_a, mr_b = hist_a.mean_rank(), hist_b.mean_rank()
    est_a = expected_metric(hist_a, n_s, "mr_hat")
    est_b = expected_metric(hist_b, n_s, "mr_hat")
    full_order = _order(full_a, full_b)
    samp_order = _order(samp_a, samp_b)
    mean_order = _order(mr_a, mr_b, higher_is_better=False)
    est_order = _order(est_a, est_b, higher_is_better=False)
    flip = "tie" not in (full_order, samp_order) and full_order != samp_order
    mr_flip = "tie" not in (mean_order, est_order) and mean_order != est_order
    return FlipReport(
        N=hist_a.N, n_s=n_s,
        full_mrr_a=full_a, full_mrr_b=full_b,
        expected_sampled_mrr_a=samp_a, expected_sampled_mrr_b=samp_b,
        mean_rank_a=mr_a, mean_rank_b=mr_b,
        expected_mr_hat_a=est_a, expected_mr_hat_b=est_b,
        full_mrr_order=full_order, sampled_mrr_order=samp_order,
        mean_rank_order=mean_order, mr_hat_order=est_order,
        flip=flip, mr_hat_flip=mr_flip,
    )
