"""Temporal edge streams: CSV ingestion, chronological splits, and ranking queries.

Node labels from the input are densely re-indexed to integer ids in order of
first appearance, so downstream samplers and scorers can use array-indexed
state. Datasets are immutable after construction and safe to share across
parallel workers.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterator, Sequence

import numpy as np

CACHE_FORMAT_VERSION = 1


@dataclass(frozen=True)
class TemporalEdge:
    """One interaction: source -> destination at time t, idx = position in the sorted stream."""

    src: int
    dst: int
    t: int | float
    idx: int


@dataclass(frozen=True)
class Query:
    """One ranking question: which destination does `src` connect to at time `t`?

    `filter_set` holds the other true destinations of the same (src, t), used by
    the filtered evaluation protocol. `origin_idx` is the index of the edge the
    query was built from and doubles as the query's stable ordinal for seeding.
    """

    src: int
    t: int | float
    true_dst: int
    filter_set: frozenset[int]
    origin_idx: int


class Dataset:
    """A time-sorted edge stream over a dense node universe 0..num_nodes-1."""

    def __init__(
        self,
        src: Sequence[int],
        dst: Sequence[int],
        t: Sequence[int | float],
        labels: Sequence[str],
        name: str = "dataset",
        num_nodes: int | None = None,
    ):
        self.src = np.asarray(src, dtype=np.int64)
        self.dst = np.asarray(dst, dtype=np.int64)
        t_arr = np.asarray(t)
        if t_arr.dtype.kind not in "iuf":
            raise ValueError("timestamps must be numeric")
        self.t = t_arr.astype(np.int64) if t_arr.dtype.kind in "iu" else t_arr.astype(np.float64)
        self.labels = [str(x) for x in labels]
        self.name = name
        self.num_nodes = int(num_nodes) if num_nodes is not None else len(self.labels)

        if not (len(self.src) == len(self.dst) == len(self.t)):
            raise ValueError("src, dst and t must have equal length")
        if self.num_nodes < 2:
            raise ValueError(f"node universe must have at least 2 nodes, got {self.num_nodes}")
        if len(self.src) == 0:
            raise ValueError("dataset has no edges")
        if self.src.min() < 0 or self.dst.min() < 0:
            raise ValueError("negative node id")
        if max(self.src.max(), self.dst.max()) >= self.num_nodes:
            raise ValueError("edge endpoint outside the node universe")
        if len(self.t) > 1 and np.any(np.diff(self.t) < 0):
            raise ValueError("edges must be sorted by non-decreasing timestamp")
        if float(self.t[0]) < 0:
            raise ValueError("timestamps must be non-negative")

    @property
    def num_edges(self) -> int:
        return len(self.src)

    @property
    def label_to_id(self) -> dict[str, int]:
        return {lab: i for i, lab in enumerate(self.labels)}

    def edge(self, i: int) -> TemporalEdge:
        return TemporalEdge(int(self.src[i]), int(self.dst[i]), self.t[i].item(), i)

    def iter_edges(self, start: int = 0, stop: int | None = None) -> Iterator[TemporalEdge]:
        stop = self.num_edges if stop is None else stop
        for i in range(start, stop):
            yield self.edge(i)

    def pair_keys(self, start: int = 0, stop: int | None = None) -> np.ndarray:
        """(src, dst) pairs in [start, stop) encoded as src * num_nodes + dst."""
        stop = self.num_edges if stop is None else stop
        return self.src[start:stop] * np.int64(self.num_nodes) + self.dst[start:stop]

    def to_csv(self, sink: str | Path | IO[str]) -> None:
        """Serialize as the ingestion CSV format (header src,dst,t; original labels)."""
        own = isinstance(sink, (str, Path))
        f = open(sink, "w", newline="", encoding="utf-8") if own else sink
        try:
            w = csv.writer(f)
            w.writerow(["src", "dst", "t"])
            for i in range(self.num_edges):
                ts = self.t[i].item()
                w.writerow([self.labels[self.src[i]], self.labels[self.dst[i]], repr(ts) if isinstance(ts, float) else ts])
        finally:
            if own:
                f.close()

    def save_cache(self, path: str | Path) -> None:
        """Versioned binary cache (npz)."""
        np.savez(
            path,
            version=np.int64(CACHE_FORMAT_VERSION),
            src=self.src,
            dst=self.dst,
            t=self.t,
            labels=np.asarray(self.labels, dtype=str),
            name=np.asarray(self.name, dtype=str),
            num_nodes=np.int64(self.num_nodes),
        )

    @classmethod
    def load_cache(cls, path: str | Path) -> "Dataset":
        with np.load(path, allow_pickle=False) as z:
            version = int(z["version"])
            if version != CACHE_FORMAT_VERSION:
                raise ValueError(f"unsupported cache version {version} (expected {CACHE_FORMAT_VERSION})")
            return cls(
                z["src"], z["dst"], z["t"],
                labels=[str(x) for x in z["labels"]],
                name=str(z["name"]),
                num_nodes=int(z["num_nodes"]),
            )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.num_nodes == other.num_nodes
            and self.labels == other.labels
            and np.array_equal(self.src, other.src)
            and np.array_equal(self.dst, other.dst)
            and np.array_equal(self.t, other.t)
        )

    def __repr__(self) -> str:
        return f"Dataset({self.name!r}, nodes={self.num_nodes}, edges={self.num_edges})"


@dataclass(frozen=True)
class Splits:
    """Contiguous chronological edge-index ranges: train < val < test."""

    train: tuple[int, int]
    val: tuple[int, int]
    test: tuple[int, int]

    def __post_init__(self):
        (a0, a1), (b0, b1), (c0, c1) = self.train, self.val, self.test
        if not (a0 == 0 and a1 == b0 and b1 == c0 and a0 < a1 < b1 < c1):
            raise ValueError("split ranges must be contiguous, non-empty and chronologically ordered")

    @property
    def num_test(self) -> int:
        return self.test[1] - self.test[0]


def _open_text(source) -> tuple[IO[str], bool]:
    if isinstance(source, (str, Path)):
        return open(source, "r", newline="", encoding="utf-8"), True
    if isinstance(source, bytes):
        return io.StringIO(source.decode("utf-8")), True
    if isinstance(source, io.BufferedIOBase) or (hasattr(source, "read") and "b" in getattr(source, "mode", "")):
        return io.TextIOWrapper(source, encoding="utf-8", newline=""), False
    return source, False


def ingest_csv(
    source,
    src_col: str = "src",
    dst_col: str = "dst",
    time_col: str = "t",
    name: str | None = None,
) -> Dataset:
    """Parse a delimited edge stream into a Dataset.

    A header row is required; columns are selected by name. Node labels are
    assigned dense ids in first-appearance order and edges are stably sorted by
    timestamp. Malformed rows raise ValueError naming the data row number
    (first row after the header is row 1).
    """
    f, own = _open_text(source)
    try:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError("empty stream: no header row") from None
        try:
            cols = (header.index(src_col), header.index(dst_col), header.index(time_col))
        except ValueError:
            raise ValueError(
                f"header {header!r} is missing one of the requested columns "
                f"({src_col!r}, {dst_col!r}, {time_col!r})"
            ) from None

        ids: dict[str, int] = {}
        labels: list[str] = []
        src_l: list[int] = []
        dst_l: list[int] = []
        t_l: list[int | float] = []
        any_float = False

        def node_id(label: str) -> int:
            i = ids.get(label)
            if i is None:
                i = len(labels)
                ids[label] = i
                labels.append(label)
            return i

        rowno = 0
        for row in reader:
            if not row:
                continue  # ignore blank lines
            rowno += 1
            if len(row) != len(header):
                raise ValueError(f"row {rowno}: expected {len(header)} columns, got {len(row)}")
            raw_t = row[cols[2]].strip()
            try:
                ts: int | float = int(raw_t)
            except ValueError:
                try:
                    ts = float(raw_t)
                    any_float = True
                except ValueError:
                    raise ValueError(f"row {rowno}: unparseable timestamp {raw_t!r}") from None
            if ts < 0:
                raise ValueError(f"row {rowno}: negative timestamp {ts}")
            src_l.append(node_id(row[cols[0]]))
            dst_l.append(node_id(row[cols[1]]))
            t_l.append(ts)

        if rowno == 0:
            raise ValueError("empty stream: no data rows")
    finally:
        if own:
            f.close()

    t_arr = np.asarray(t_l, dtype=np.float64 if any_float else np.int64)
    order = np.argsort(t_arr, kind="stable")
    ds_name = name if name is not None else (Path(source).stem if isinstance(source, (str, Path)) else "dataset")
    return Dataset(
        np.asarray(src_l, dtype=np.int64)[order],
        np.asarray(dst_l, dtype=np.int64)[order],
        t_arr[order],
        labels=labels,
        name=ds_name,
    )


def load_dataset(path: str | Path, **csv_kwargs) -> Dataset:
    """Load a dataset from CSV or from a binary cache, dispatching on extension."""
    p = Path(path)
    if p.suffix == ".npz":
        return Dataset.load_cache(p)
    return ingest_csv(p, **csv_kwargs)


def chronological_split(d: Dataset, fractions: Sequence[float] = (0.7, 0.15, 0.15)) -> Splits:
    """Split the stream into train/val/test by edge count, never splitting a timestamp.

    Boundaries are floor(cumulative_fraction * num_edges); a boundary landing
    inside a run of equal timestamps moves forward to the next timestamp change.
    """
    if len(fractions) != 3 or any(f <= 0 for f in fractions):
        raise ValueError("need three positive fractions")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(f"fractions must sum to 1, got {sum(fractions)!r}")
    n = d.num_edges
    # +1e-9 so exact rational fractions (e.g. thirds) floor to their true value
    b1 = int(fractions[0] * n + 1e-9)
    b2 = int((fractions[0] + fractions[1]) * n + 1e-9)

    def align(b: int) -> int:
        while 0 < b < n and d.t[b - 1] == d.t[b]:
            b += 1
        return b

    b1 = align(max(b1, 1))
    b2 = align(max(b2, b1 + 1))
    if not (0 < b1 < b2 < n):
        raise ValueError("dataset too small for three non-empty timestamp-atomic splits")
    return Splits(train=(0, b1), val=(b1, b2), test=(b2, n))


def surprise_index(d: Dataset, s: Splits) -> float:
    """Fraction of test edges whose (src, dst) pair never occurs in train or val.

    Pair identity ignores timestamps; duplicated test pairs count once per edge.
    """
    lo, hi = s.test
    if hi <= lo:
        raise ValueError("empty test split")
    history = np.unique(d.pair_keys(0, s.val[1]))
    test_keys = d.pair_keys(lo, hi)
    seen = np.isin(test_keys, history)
    return float(1.0 - seen.sum() / len(test_keys))


def build_queries(d: Dataset, edge_range: tuple[int, int]) -> list[Query]:
    """One ranking query per edge in [start, stop).

    The filter set of a query holds every other destination that `src` links to
    at the identical timestamp (the filtered protocol's granularity), excluding
    the query's own true destination.
    """
    start, stop = edge_range
    if not (0 <= start < stop <= d.num_edges):
        raise ValueError(f"edge range {edge_range} outside dataset with {d.num_edges} edges")
    groups: dict[tuple[int, int | float], set[int]] = {}
    for i in range(d.num_edges):
        groups.setdefault((int(d.src[i]), d.t[i].item()), set()).add(int(d.dst[i]))
    out = []
    for i in range(start, stop):
        src, dst, t = int(d.src[i]), int(d.dst[i]), d.t[i].item()
        fs = frozenset(groups[(src, t)] - {dst})
        out.append(Query(src=src, t=t, true_dst=dst, filter_set=fs, origin_idx=i))
    return out
