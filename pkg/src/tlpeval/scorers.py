"""Scalable heuristic baselines: destination recency or popularity, tracked
per source node (local) or over the whole stream (global).

Scores for keys never observed return the sentinel -1, strictly below any legal
statistic (timestamps and counts are non-negative), so unseen destinations rank
last; ties among them are resolved by the metrics engine's tie mode.
"""

from __future__ import annotations

import csv
from typing import IO, Iterable

import numpy as np

from .dataset import TemporalEdge

SCALES = ("local", "global")
SIGNALS = ("recency", "popularity")

#: score reported for keys with no observed statistic
UNSEEN = -1.0

SCORER_NAMES = ("local-recency", "local-popularity", "global-recency", "global-popularity")


def parse_scorer_name(name: str) -> tuple[str, str]:
    if name not in SCORER_NAMES:
        raise ValueError(f"unknown scorer {name!r} (expected one of {SCORER_NAMES})")
    scale, signal = name.split("-")
    return scale, signal


class HeuristicScorer:
    """Fitted state of one heuristic baseline; fold edges in with update()."""

    def __init__(self, scale: str, signal: str, num_nodes: int):
        if scale not in SCALES:
            raise ValueError(f"unknown scale {scale!r}")
        if signal not in SIGNALS:
            raise ValueError(f"unknown signal {signal!r}")
        self.scale = scale
        self.signal = signal
        self.num_nodes = num_nodes
        self.clock = -np.inf
        self._global = np.full(num_nodes, UNSEEN, dtype=np.float64)
        self._local: dict[int, dict[int, float]] = {}

    @property
    def name(self) -> str:
        return f"{self.scale}-{self.signal}"

    def update(self, e: TemporalEdge) -> "HeuristicScorer":
        if e.t < self.clock:
            raise ValueError(f"time regression: edge at t={e.t} after clock={self.clock}")
        self.clock = e.t
        if self.scale == "global":
            if self.signal == "recency":
                self._global[e.dst] = e.t
            else:
                self._global[e.dst] = max(self._global[e.dst], 0.0) + 1.0
        else:
            row = self._local.setdefault(e.src, {})
            if self.signal == "recency":
                row[e.dst] = float(e.t)
            else:
                row[e.dst] = row.get(e.dst, 0.0) + 1.0
        return self

    def score(self, src: int, dst: int) -> float:
        if self.scale == "global":
            return float(self._global[dst])
        return self._local.get(src, {}).get(dst, UNSEEN)

    def score_universe(self, src: int, out: np.ndarray | None = None) -> np.ndarray:
        """Scores for every destination id, for full-ranking evaluation."""
        if self.scale == "global":
            if out is None:
                return self._global.copy()
            out[:] = self._global
            return out
        if out is None:
            out = np.empty(self.num_nodes, dtype=np.float64)
        out.fill(UNSEEN)
        row = self._local.get(src)
        if row:
            out[np.fromiter(row.keys(), dtype=np.int64, count=len(row))] = np.fromiter(
                row.values(), dtype=np.float64, count=len(row)
            )
        return out

    def score_many(self, src: int, dsts: np.ndarray) -> np.ndarray:
        if self.scale == "global":
            return self._global[dsts]
        row = self._local.get(src)
        if not row:
            return np.full(len(dsts), UNSEEN, dtype=np.float64)
        return np.asarray([row.get(int(d), UNSEEN) for d in dsts], dtype=np.float64)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, HeuristicScorer):
            return NotImplemented
        return (
            self.scale == other.scale
            and self.signal == other.signal
            and self.num_nodes == other.num_nodes
            and self.clock == other.clock
            and np.array_equal(self._global, other._global)
            and {k: v for k, v in self._local.items() if v} == {k: v for k, v in other._local.items() if v}
        )

    def __repr__(self) -> str:
        return f"HeuristicScorer({self.name}, clock={self.clock})"


def fit_scorer(
    edges: Iterable[TemporalEdge], scale: str, signal: str, num_nodes: int
) -> HeuristicScorer:
    """Fold a time-sorted edge sequence into a fresh scorer state.

    Exactly equivalent to repeated update(); unsorted input raises.
    """
    state = HeuristicScorer(scale, signal, num_nodes)
    prev = -np.inf
    for e in edges:
        if e.t < prev:
            raise ValueError(f"edges not time-sorted: t={e.t} after t={prev}")
        prev = e.t
        state.update(e)
    return state


class InjectedScores:
    """Third-party model scores loaded from CSV rows (query_ordinal, candidate, score).

    Supports sampled evaluation only: it can score specific candidates of a
    query, not the whole universe, so reports built from it carry no
    ground-truth full ranks.
    """

    name = "injected"

    def __init__(self, table: dict[tuple[int, int], float]):
        self._table = table

    @classmethod
    def from_csv(cls, source: IO[str] | str) -> "InjectedScores":
        own = isinstance(source, str)
        f = open(source, "r", newline="", encoding="utf-8") if own else source
        try:
            reader = csv.reader(f)
            header = next(reader, None)
            if header is None:
                raise ValueError("empty injected-scores stream")
            table: dict[tuple[int, int], float] = {}
            for rowno, row in enumerate(reader, start=1):
                if not row:
                    continue
                if len(row) != 3:
                    raise ValueError(f"injected-scores row {rowno}: expected 3 columns, got {len(row)}")
                table[(int(row[0]), int(row[1]))] = float(row[2])
            return cls(table)
        finally:
            if own:
                f.close()

    def score_candidates(self, query_ordinal: int, dsts: np.ndarray) -> np.ndarray:
        out = np.empty(len(dsts), dtype=np.float64)
        for i, d in enumerate(dsts):
            key = (query_ordinal, int(d))
            if key not in self._table:
                raise ValueError(f"injected scores missing entry for query {query_ordinal}, candidate {int(d)}")
            out[i] = self._table[key]
        return out
