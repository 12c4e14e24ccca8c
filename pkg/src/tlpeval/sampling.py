"""Negative candidate generation for ranking queries.

All strategies draw without replacement, never include the query's true
destination, and are deterministic given (seed, query ordinal): each query gets
its own RNG substream, so results are independent of evaluation order and safe
to compute in parallel.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import IO, Iterable, Mapping

import numpy as np

from .dataset import Dataset, Query

STRATEGIES = ("uniform", "historical", "inductive", "popularity", "shared_fixed")
COLLISION_MODES = ("raw", "filtered")

#: query_ref marker for candidate sets shared by every query
SHARED = -1


@dataclass(frozen=True)
class SamplerConfig:
    strategy: str
    n_s: int
    seed: int = 0
    pad_with_uniform: bool = True
    collision_mode: str = "raw"

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r} (expected one of {STRATEGIES})")
        if self.collision_mode not in COLLISION_MODES:
            raise ValueError(f"unknown collision_mode {self.collision_mode!r}")
        if self.n_s < 1:
            raise ValueError("n_s must be >= 1")


@dataclass(frozen=True)
class CandidateSet:
    query_ref: int  # query ordinal, or SHARED
    candidates: np.ndarray
    strategy: str
    n_s: int
    collision_mode: str

    def __post_init__(self):
        object.__setattr__(self, "candidates", np.asarray(self.candidates, dtype=np.int64))


def substream(seed: int, ordinal: int) -> np.random.Generator:
    """Per-query RNG derived from (seed, query ordinal)."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, ordinal])))


def _rng_for(q: Query, cfg: SamplerConfig, rng: np.random.Generator | None) -> np.random.Generator:
    return rng if rng is not None else substream(cfg.seed, q.origin_idx)


def _exclusions(q: Query, cfg: SamplerConfig) -> set[int]:
    if cfg.collision_mode == "filtered":
        return {q.true_dst} | set(q.filter_set)
    return {q.true_dst}


def _draw_uniform_excluding(
    num_nodes: int, excluded: set[int], k: int, rng: np.random.Generator
) -> np.ndarray:
    """k distinct ids uniform over 0..num_nodes-1 minus `excluded`."""
    pool = num_nodes - len(excluded)
    if k > pool:
        raise ValueError(f"requested {k} distinct candidates but the eligible pool has size {pool}")
    if k == 0:
        return np.empty(0, dtype=np.int64)
    if 2 * k >= pool:
        eligible = np.setdiff1d(np.arange(num_nodes, dtype=np.int64), np.fromiter(excluded, dtype=np.int64, count=len(excluded)))
        return eligible[rng.permutation(len(eligible))[:k]]
    chosen: list[int] = []
    seen = set(excluded)
    while len(chosen) < k:
        for v in rng.integers(0, num_nodes, size=2 * (k - len(chosen)) + 4):
            v = int(v)
            if v not in seen:
                seen.add(v)
                chosen.append(v)
                if len(chosen) == k:
                    break
    return np.asarray(chosen, dtype=np.int64)


def _subset_without_replacement(pool: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    if k == len(pool):
        return pool.copy()
    return pool[rng.permutation(len(pool))[:k]]


def _pad(
    drawn: np.ndarray,
    q: Query,
    num_nodes: int,
    cfg: SamplerConfig,
    rng: np.random.Generator,
    pool_desc: str,
) -> np.ndarray:
    short = cfg.n_s - len(drawn)
    if short == 0:
        return drawn
    if not cfg.pad_with_uniform:
        raise ValueError(
            f"{pool_desc} pool has only {len(drawn)} eligible candidates for n_s={cfg.n_s} "
            "and uniform padding is disabled"
        )
    extra = _draw_uniform_excluding(num_nodes, _exclusions(q, cfg) | set(int(x) for x in drawn), short, rng)
    return np.concatenate([drawn, extra])


def uniform_sample(
    q: Query, num_nodes: int, cfg: SamplerConfig, rng: np.random.Generator | None = None
) -> CandidateSet:
    """n_s distinct ids uniform over the universe minus the true destination
    (and minus the filter set in filtered mode)."""
    rng = _rng_for(q, cfg, rng)
    cands = _draw_uniform_excluding(num_nodes, _exclusions(q, cfg), cfg.n_s, rng)
    return CandidateSet(q.origin_idx, cands, "uniform", cfg.n_s, cfg.collision_mode)


def historical_sample(
    q: Query,
    history: Mapping[int, np.ndarray],
    num_nodes: int,
    cfg: SamplerConfig,
    rng: np.random.Generator | None = None,
) -> CandidateSet:
    """Candidates drawn from the query source's training-time partners.

    `history` maps src -> sorted array of distinct train destinations. Shortfall
    is topped up from the uniform pool when padding is enabled, else raises.
    """
    rng = _rng_for(q, cfg, rng)
    excl = _exclusions(q, cfg)
    base = history.get(q.src)
    pool = np.empty(0, dtype=np.int64) if base is None else base[~np.isin(base, np.fromiter(excl, dtype=np.int64, count=len(excl)))]
    drawn = _subset_without_replacement(pool, min(cfg.n_s, len(pool)), rng)
    cands = _pad(drawn, q, num_nodes, cfg, rng, "historical")
    return CandidateSet(q.origin_idx, cands, "historical", cfg.n_s, cfg.collision_mode)


def inductive_sample(
    q: Query,
    test_pairs_so_far: Mapping[int, np.ndarray],
    train_pairs: Mapping[int, np.ndarray],
    num_nodes: int,
    cfg: SamplerConfig,
    rng: np.random.Generator | None = None,
) -> CandidateSet:
    """Candidates from pairs first seen during testing (strictly before q.t),
    excluding anything already a train pair. Draw/pad semantics as historical."""
    rng = _rng_for(q, cfg, rng)
    excl = _exclusions(q, cfg)
    seen = test_pairs_so_far.get(q.src)
    if seen is None:
        pool = np.empty(0, dtype=np.int64)
    else:
        pool = np.asarray(sorted(set(int(x) for x in seen)), dtype=np.int64)
        known = train_pairs.get(q.src)
        if known is not None:
            pool = pool[~np.isin(pool, known)]
        pool = pool[~np.isin(pool, np.fromiter(excl, dtype=np.int64, count=len(excl)))]
    drawn = _subset_without_replacement(pool, min(cfg.n_s, len(pool)), rng)
    cands = _pad(drawn, q, num_nodes, cfg, rng, "inductive")
    return CandidateSet(q.origin_idx, cands, "inductive", cfg.n_s, cfg.collision_mode)


def popularity_sample(
    q: Query,
    dst_counts: np.ndarray,
    cfg: SamplerConfig,
    rng: np.random.Generator | None = None,
) -> CandidateSet:
    """Weighted draw without replacement, probability proportional to train
    destination occurrence counts (successive renormalization semantics).

    Uses exponential-race keys: taking the k largest log(u)/w keys reproduces
    sequential weighted sampling without replacement exactly in distribution.
    """
    rng = _rng_for(q, cfg, rng)
    counts = np.asarray(dst_counts, dtype=np.float64)
    num_nodes = len(counts)
    excl = _exclusions(q, cfg)
    support = np.flatnonzero(counts > 0)
    support = support[~np.isin(support, np.fromiter(excl, dtype=np.int64, count=len(excl)))]
    k = min(cfg.n_s, len(support))
    if k > 0:
        keys = np.log(rng.random(len(support))) / counts[support]
        drawn = support[np.argsort(keys)[::-1][:k]].astype(np.int64)
    else:
        drawn = np.empty(0, dtype=np.int64)
    cands = _pad(drawn, q, num_nodes, cfg, rng, "popularity")
    return CandidateSet(q.origin_idx, cands, "popularity", cfg.n_s, cfg.collision_mode)


def shared_fixed_sample(
    num_nodes: int, cfg: SamplerConfig, rng: np.random.Generator | None = None
) -> CandidateSet:
    """One global candidate set for all queries, drawn uniformly without
    replacement from the whole universe.

    True-destination / filter collisions are the metrics engine's job: it drops
    the colliding ids per query and records the reduced effective sample size.
    """
    if cfg.n_s > num_nodes:
        raise ValueError(f"n_s={cfg.n_s} exceeds universe size {num_nodes}")
    rng = rng if rng is not None else np.random.Generator(np.random.PCG64(np.random.SeedSequence([cfg.seed])))
    cands = _draw_uniform_excluding(num_nodes, set(), cfg.n_s, rng)
    return CandidateSet(SHARED, cands, "shared_fixed", cfg.n_s, cfg.collision_mode)


def uniform_sample_batch(
    pool: np.ndarray, n_s: int, m: int, rng: np.random.Generator
) -> np.ndarray:
    """m independent uniform without-replacement samples of size n_s from `pool`,
    as an (m, n_s) array. Monte Carlo helper for estimator validation.

    Implementation: keep the first n_s distinct values of an i.i.d. uniform draw
    stream per row (equivalent to sampling without replacement); falls back to
    key-ranking when n_s is a large share of the pool.
    """
    pool = np.asarray(pool, dtype=np.int64)
    p = len(pool)
    if n_s > p:
        raise ValueError(f"requested {n_s} distinct candidates but the eligible pool has size {p}")
    if 4 * n_s >= p:
        keys = rng.random((m, p))
        idx = np.argpartition(keys, n_s - 1, axis=1)[:, :n_s]
        return pool[idx]
    out = np.empty((m, n_s), dtype=np.int64)
    pending = np.arange(m)
    width = 2 * n_s + 8
    while pending.size:
        draws = rng.integers(0, p, size=(pending.size, width))
        order = np.argsort(draws, axis=1, kind="stable")
        sorted_vals = np.take_along_axis(draws, order, axis=1)
        first_sorted = np.ones_like(sorted_vals, dtype=bool)
        first_sorted[:, 1:] = sorted_vals[:, 1:] != sorted_vals[:, :-1]
        first = np.zeros_like(first_sorted)
        np.put_along_axis(first, order, first_sorted, axis=1)
        seen_so_far = np.cumsum(first, axis=1)
        done = seen_so_far[:, -1] >= n_s
        keep = first & (seen_so_far <= n_s)
        rows = pending[done]
        out[rows] = pool[draws[done][keep[done]].reshape(len(rows), n_s)]
        pending = pending[~done]
    return out


def build_pair_history(d: Dataset, edge_range: tuple[int, int]) -> dict[int, np.ndarray]:
    """src -> sorted distinct destinations observed in [start, stop)."""
    start, stop = edge_range
    hist: dict[int, set[int]] = {}
    for i in range(start, stop):
        hist.setdefault(int(d.src[i]), set()).add(int(d.dst[i]))
    return {s: np.asarray(sorted(v), dtype=np.int64) for s, v in hist.items()}


def destination_counts(d: Dataset, edge_range: tuple[int, int]) -> np.ndarray:
    """Occurrence count per destination id over [start, stop)."""
    start, stop = edge_range
    return np.bincount(d.dst[start:stop], minlength=d.num_nodes).astype(np.int64)


def export_candidates_csv(sets: Iterable[CandidateSet], sink: IO[str]) -> int:
    """Write candidate sets as audit rows: query_ordinal,strategy,candidates (space-separated)."""
    sink.write("query_ordinal,strategy,candidates\n")
    n = 0
    for cs in sets:
        sink.write(f"{cs.query_ref},{cs.strategy},{' '.join(str(int(c)) for c in cs.candidates)}\n")
        n += 1
    return n
