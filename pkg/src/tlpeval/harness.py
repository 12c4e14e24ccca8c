"""Experiment orchestration: scorer x sampler x seed evaluation matrices,
cross-sampler rank correlations, and grouped-correlation (Simpson) checks.

Every cell's randomness is derived from (run seed, sampler index, query
ordinal), so results are independent of execution order and identical across
worker counts. Aggregation walks cells in configured order and averages with
compensated summation, keeping serialized reports byte-stable.
"""

from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from ._version import __version__
from .dataset import Dataset, Query, Splits, build_queries, chronological_split, load_dataset, surprise_index
from .generator import GenConfig, generate
from .metrics import (
    FILTER_MODES,
    TIE_MODES,
    RankRecord,
    average_ranks,
    full_rank_from_universe,
    rank_metrics,
)
from .sampling import (
    SamplerConfig,
    build_pair_history,
    destination_counts,
    historical_sample,
    inductive_sample,
    popularity_sample,
    shared_fixed_sample,
    uniform_sample,
)
from .scorers import SCORER_NAMES, InjectedScores, fit_scorer, parse_scorer_name

BASE_METRICS = ("sampled-mrr", "sampled-mean-rank", "sampled-hits", "mr-hat", "auc-hat")
SCATTER_GROUPINGS = ("seed", "dataset", "time-slice")


class CellError(RuntimeError):
    """A submodule failure annotated with the (scorer, sampler, seed) cell coordinates."""


def expand_metrics(metrics: Sequence[str], ks: Sequence[int]) -> list[str]:
    out = []
    for m in metrics:
        if m == "sampled-hits":
            out.extend(f"sampled-hits@{k}" for k in ks)
        else:
            out.append(m)
    return out


def full_twin(metric: str) -> tuple[str, str]:
    """The full-ranking counterpart of a sampled metric and the filter mode it uses.

    Conventional top-rank metrics (MRR, Hits) compare against filtered full
    ranks; the estimators target the raw mean rank / AUC, where every non-target
    entity counts as a negative.
    """
    if metric == "sampled-mrr":
        return "full-mrr", "filtered"
    if metric == "sampled-mean-rank":
        return "full-mean-rank", "raw"
    if metric.startswith("sampled-hits@"):
        return f"full-hits@{metric.split('@', 1)[1]}", "filtered"
    if metric == "mr-hat":
        return "full-mean-rank", "raw"
    if metric == "auc-hat":
        return "full-auc", "raw"
    raise ValueError(f"unknown metric {metric!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: str | GenConfig
    scorers: tuple[str, ...]
    samplers: tuple[SamplerConfig, ...]
    split_fractions: tuple[float, float, float] = (0.7, 0.15, 0.15)
    seeds: tuple[int, ...] = (0,)
    ks: tuple[int, ...] = (1, 10)
    metrics: tuple[str, ...] = ("sampled-mrr", "sampled-hits", "mr-hat", "auc-hat")
    tie_mode: str = "mean"
    filter_mode: str = "raw"
    scatter_grouping: str = "seed"
    time_slices: int = 4
    prequential: bool = True
    include_val_in_state: bool = True
    injected_scores: str | None = None
    jobs: int = 1
    dataset_columns: tuple[str, str, str] = ("src", "dst", "t")
    name: str = "experiment"

    def __post_init__(self):
        if not self.scorers:
            raise ValueError("scorers: need at least one scorer")
        if not self.samplers:
            raise ValueError("samplers: need at least one sampler")
        if not self.seeds:
            raise ValueError("seeds: need at least one seed")
        for s in self.scorers:
            if s not in SCORER_NAMES and s != "injected":
                raise ValueError(f"scorers: unknown scorer {s!r}")
        if "injected" in self.scorers and not self.injected_scores:
            raise ValueError("injected_scores: required when an 'injected' scorer is configured")
        for m in self.metrics:
            if m not in BASE_METRICS:
                raise ValueError(f"metrics: unknown metric {m!r} (expected subset of {BASE_METRICS})")
        if self.tie_mode not in TIE_MODES:
            raise ValueError(f"tie_mode: unknown mode {self.tie_mode!r}")
        if self.filter_mode not in FILTER_MODES:
            raise ValueError(f"filter_mode: unknown mode {self.filter_mode!r}")
        if self.scatter_grouping not in SCATTER_GROUPINGS:
            raise ValueError(f"scatter_grouping: expected one of {SCATTER_GROUPINGS}")
        if self.time_slices < 1:
            raise ValueError("time_slices: must be >= 1")
        if self.jobs < 1:
            raise ValueError("jobs: must be >= 1")

    def sampler_labels(self) -> list[str]:
        labels = []
        seen: dict[str, int] = {}
        for s in self.samplers:
            k = seen.get(s.strategy, 0)
            seen[s.strategy] = k + 1
            labels.append(s.strategy if k == 0 else f"{s.strategy}-{k + 1}")
        return labels

    def to_mapping(self) -> dict:
        d = {
            "dataset": self.dataset if isinstance(self.dataset, str) else {"generator": self.dataset.to_mapping()},
            "scorers": list(self.scorers),
            "samplers": [dataclasses.asdict(s) for s in self.samplers],
            "split_fractions": list(self.split_fractions),
            "seeds": list(self.seeds),
            "ks": list(self.ks),
            "metrics": list(self.metrics),
            "tie_mode": self.tie_mode,
            "filter_mode": self.filter_mode,
            "scatter_grouping": self.scatter_grouping,
            "time_slices": self.time_slices,
            "prequential": self.prequential,
            "include_val_in_state": self.include_val_in_state,
            "injected_scores": self.injected_scores,
            # jobs deliberately omitted: execution knob, must not affect outputs
            "dataset_columns": list(self.dataset_columns),
            "name": self.name,
        }
        return d

    @classmethod
    def from_mapping(cls, m: Mapping) -> "ExperimentConfig":
        if not isinstance(m, Mapping):
            raise ValueError("config: expected a mapping")
        for key in ("dataset", "scorers", "samplers"):
            if key not in m:
                raise ValueError(f"{key}: required key is missing")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(m) - known
        if unknown:
            raise ValueError(f"{sorted(unknown)[0]}: unknown config key")

        dataset = m["dataset"]
        if isinstance(dataset, Mapping):
            if "generator" not in dataset:
                raise ValueError("dataset.generator: required for a mapping-valued dataset")
            try:
                dataset = GenConfig.from_mapping(dict(dataset["generator"]))
            except (TypeError, ValueError) as e:
                raise ValueError(f"dataset.generator: {e}") from None
        elif not isinstance(dataset, str):
            raise ValueError("dataset: expected a path or a {'generator': ...} mapping")

        samplers = []
        for i, s in enumerate(m["samplers"]):
            if isinstance(s, str):
                s = {"strategy": s, "n_s": 20}
            if not isinstance(s, Mapping) or "strategy" not in s:
                raise ValueError(f"samplers[{i}].strategy: required")
            try:
                samplers.append(SamplerConfig(**{str(k): v for k, v in dict(s).items()}))
            except (TypeError, ValueError) as e:
                raise ValueError(f"samplers[{i}]: {e}") from None

        kwargs: dict = {
            "dataset": dataset,
            "scorers": tuple(m["scorers"]),
            "samplers": tuple(samplers),
        }
        for f in dataclasses.fields(cls):
            if f.name in kwargs or f.name not in m:
                continue
            v = m[f.name]
            if isinstance(v, list):
                v = tuple(v)
            kwargs[f.name] = v
        try:
            return cls(**kwargs)
        except TypeError as e:
            raise ValueError(f"config: {e}") from None


@dataclass(frozen=True)
class SimpsonReport:
    within: dict[str, float]
    pooled_r: float
    paradox: bool

    def to_dict(self) -> dict:
        return {"within": dict(self.within), "pooled_r": self.pooled_r, "paradox": self.paradox}


@dataclass
class ReportMatrix:
    cells: dict[tuple[str, str, int, str], float]
    full_entries: dict[tuple[str, str], float]
    scatter: dict[str, list[tuple[str, float, float]]]
    correlations: dict[tuple[str, str], float | None]
    simpson: SimpsonReport | None
    metadata: dict


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    """Product-moment correlation; errors on length mismatch or constant input."""
    x = [float(v) for v in x]
    y = [float(v) for v in y]
    if len(x) != len(y):
        raise ValueError(f"length mismatch: {len(x)} vs {len(y)}")
    if len(x) < 2:
        raise ValueError("need at least 2 points")
    if min(x) == max(x) or min(y) == max(y):
        raise ValueError("zero variance input")
    n = len(x)
    mx = math.fsum(x) / n
    my = math.fsum(y) / n
    sxy = math.fsum((a - mx) * (b - my) for a, b in zip(x, y))
    sxx = math.fsum((a - mx) ** 2 for a in x)
    syy = math.fsum((b - my) ** 2 for b in y)
    return sxy / math.sqrt(sxx * syy)


def spearman(a: Sequence[float], b: Sequence[float]) -> float:
    """Pearson correlation of tie-averaged ranks."""
    if len(a) != len(b):
        raise ValueError(f"length mismatch: {len(a)} vs {len(b)}")
    if len(a) < 2:
        raise ValueError("need at least 2 points")
    ra = average_ranks(np.asarray(a, dtype=np.float64))
    rb = average_ranks(np.asarray(b, dtype=np.float64))
    try:
        return pearson(list(ra), list(rb))
    except ValueError as e:
        raise ValueError(f"{e} after ranking") from None


def correlations_from_report(m: "ReportMatrix") -> dict[tuple[str, str], float | None]:
    """Recompute cross-sampler Spearman correlations of scorer rankings from an
    existing report's cells (mean primary metric across seeds per cell)."""
    primary = m.metadata["primary_metric"]
    scorers = list(dict.fromkeys(s for (s, _, _, _) in m.cells))
    labels = list(dict.fromkeys(label for (_, label, _, _) in m.cells))
    seeds = list(dict.fromkeys(seed for (_, _, seed, _) in m.cells))
    vectors = {
        label: [
            math.fsum(m.cells[(scorer, label, seed, primary)] for seed in seeds) / len(seeds)
            for scorer in scorers
        ]
        for label in labels
    }
    out: dict[tuple[str, str], float | None] = {}
    for i, la in enumerate(labels):
        for lb in labels[i + 1:]:
            try:
                out[(la, lb)] = spearman(vectors[la], vectors[lb])
            except ValueError:
                out[(la, lb)] = None
    return out


def simpson_check(groups: Mapping[str, Sequence[tuple[float, float]]]) -> SimpsonReport:
    """Per-group vs pooled Pearson correlation; the paradox flag is set when all
    group correlations share one sign and the pooled correlation has the other."""
    if len(groups) < 2:
        raise ValueError("need at least 2 groups")
    within: dict[str, float] = {}
    pooled_x: list[float] = []
    pooled_y: list[float] = []
    for label, points in groups.items():
        if len(points) < 2:
            raise ValueError(f"group {label!r}: need at least 2 points")
        xs = [p[0] for p in points]
        ys = [p[1] for p in points]
        try:
            within[label] = pearson(xs, ys)
        except ValueError as e:
            raise ValueError(f"group {label!r}: {e}") from None
        pooled_x.extend(xs)
        pooled_y.extend(ys)
    pooled = pearson(pooled_x, pooled_y)
    signs = {math.copysign(1.0, r) for r in within.values() if r != 0.0}
    paradox = (
        len(signs) == 1
        and all(r != 0.0 for r in within.values())
        and pooled != 0.0
        and math.copysign(1.0, pooled) != next(iter(signs))
    )
    return SimpsonReport(within=within, pooled_r=pooled, paradox=paradox)


# ---------------------------------------------------------------------------
# candidate plans
# ---------------------------------------------------------------------------

@dataclass
class CandidatePlan:
    label: str
    seed: int
    sampler: SamplerConfig  # with the derived per-cell instance seed
    matrix: np.ndarray | None  # (num_queries, n_s) for per-query strategies
    shared: np.ndarray | None  # global candidate ids for shared_fixed


def _instance_seed(run_seed: int, sampler_index: int, sampler_seed: int) -> int:
    ss = np.random.SeedSequence([run_seed, sampler_index, sampler_seed])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def build_candidate_plan(
    dataset: Dataset,
    splits: Splits,
    queries: Sequence[Query],
    sampler: SamplerConfig,
    label: str,
    run_seed: int,
    sampler_index: int,
) -> CandidatePlan:
    eff = dataclasses.replace(sampler, seed=_instance_seed(run_seed, sampler_index, sampler.seed))
    try:
        if eff.strategy == "shared_fixed":
            cs = shared_fixed_sample(dataset.num_nodes, eff)
            return CandidatePlan(label, run_seed, eff, None, cs.candidates)

        matrix = np.empty((len(queries), eff.n_s), dtype=np.int64)
        if eff.strategy == "uniform":
            for i, q in enumerate(queries):
                matrix[i] = uniform_sample(q, dataset.num_nodes, eff).candidates
        elif eff.strategy == "historical":
            history = build_pair_history(dataset, splits.train)
            for i, q in enumerate(queries):
                matrix[i] = historical_sample(q, history, dataset.num_nodes, eff).candidates
        elif eff.strategy == "popularity":
            counts = destination_counts(dataset, splits.train)
            for i, q in enumerate(queries):
                matrix[i] = popularity_sample(q, counts, eff).candidates
        elif eff.strategy == "inductive":
            train_pairs = build_pair_history(dataset, splits.train)
            seen: dict[int, set[int]] = {}
            seen_arr: dict[int, np.ndarray] = {}
            pending: list[Query] = []
            cur_t: int | float | None = None
            row = 0
            for q in queries:
                if cur_t is not None and q.t != cur_t:
                    for p in pending:
                        seen.setdefault(p.src, set()).add(p.true_dst)
                        seen_arr[p.src] = np.fromiter(sorted(seen[p.src]), dtype=np.int64)
                    pending = []
                cur_t = q.t
                matrix[row] = inductive_sample(q, seen_arr, train_pairs, dataset.num_nodes, eff).candidates
                pending.append(q)
                row += 1
        else:  # pragma: no cover - SamplerConfig validates strategies
            raise ValueError(f"unknown strategy {eff.strategy!r}")
        return CandidatePlan(label, run_seed, eff, matrix, None)
    except ValueError as e:
        raise CellError(f"sampler={label} seed={run_seed}: {e}") from e


# ---------------------------------------------------------------------------
# scorer sweep
# ---------------------------------------------------------------------------

@dataclass
class SweepResult:
    scorer: str
    has_full: bool
    full_raw: np.ndarray | None  # (Q,) tie-adjusted raw full ranks
    full_filtered: np.ndarray | None
    n_filtered: np.ndarray | None  # (Q,) universe negatives after filtering
    sampled: dict[tuple[str, int], tuple[np.ndarray, np.ndarray]]  # (label, seed) -> (ranks, n_eff)


def _sweep_scorer(
    dataset: Dataset,
    splits: Splits,
    queries: Sequence[Query],
    scorer_name: str,
    plans: Sequence[CandidatePlan],
    cfg: ExperimentConfig,
) -> SweepResult:
    nq = len(queries)
    sampled = {
        (p.label, p.seed): (np.empty(nq, dtype=np.float64), np.empty(nq, dtype=np.int64)) for p in plans
    }

    injected = None
    state = None
    if scorer_name == "injected":
        injected = InjectedScores.from_csv(cfg.injected_scores)
        full_raw = full_filt = n_filt = None
    else:
        scale, signal = parse_scorer_name(scorer_name)
        fit_stop = splits.val[1] if cfg.include_val_in_state else splits.train[1]
        state = fit_scorer(dataset.iter_edges(0, fit_stop), scale, signal, dataset.num_nodes)
        full_raw = np.empty(nq, dtype=np.float64)
        full_filt = np.empty(nq, dtype=np.float64)
        n_filt = np.empty(nq, dtype=np.int64)

    scores = np.empty(dataset.num_nodes, dtype=np.float64)
    for qi, q in enumerate(queries):
        filter_arr = np.fromiter(q.filter_set, dtype=np.int64, count=len(q.filter_set)) if q.filter_set else None
        if injected is None:
            state.score_universe(q.src, out=scores)
            target = scores[q.true_dst]
            rec_raw = full_rank_from_universe(scores, q.true_dst, (), cfg.tie_mode, "raw")
            rec_filt = full_rank_from_universe(
                scores, q.true_dst, filter_arr if filter_arr is not None else (), cfg.tie_mode, "filtered"
            )
            full_raw[qi] = rec_raw.full_rank
            full_filt[qi] = rec_filt.full_rank
            n_filt[qi] = rec_filt.N

        for plan in plans:
            key = (plan.label, plan.seed)
            if plan.shared is not None:
                cand = plan.shared[plan.shared != q.true_dst]
                if plan.sampler.collision_mode == "filtered" and filter_arr is not None:
                    cand = cand[~np.isin(cand, filter_arr)]
            else:
                cand = plan.matrix[qi]
            if len(cand) == 0:
                raise CellError(
                    f"scorer={scorer_name} sampler={plan.label} seed={plan.seed}: "
                    f"query {q.origin_idx} has an empty effective candidate set"
                )
            if injected is None:
                cscores = scores[cand]
                tscore = target
            else:
                cscores = injected.score_candidates(q.origin_idx, cand)
                tscore = injected.score_candidates(q.origin_idx, np.asarray([q.true_dst]))[0]
            better = int((cscores > tscore).sum())
            equal = int((cscores == tscore).sum())
            adj = 0.0 if cfg.tie_mode == "optimistic" else (float(equal) if cfg.tie_mode == "pessimistic" else equal / 2.0)
            ranks, effs = sampled[key]
            ranks[qi] = 1.0 + better + adj
            effs[qi] = len(cand)

        if cfg.prequential and state is not None:
            state.update(dataset.edge(q.origin_idx))

    return SweepResult(
        scorer=scorer_name,
        has_full=injected is None,
        full_raw=full_raw,
        full_filtered=full_filt,
        n_filtered=n_filt,
        sampled=sampled,
    )


def _sweep_task(args) -> SweepResult:
    try:
        return _sweep_scorer(*args)
    except CellError:
        raise
    except ValueError as e:
        raise CellError(f"scorer={args[3]}: {e}") from e


# ---------------------------------------------------------------------------
# run_matrix
# ---------------------------------------------------------------------------

def resolve_dataset(cfg: ExperimentConfig) -> Dataset:
    if isinstance(cfg.dataset, GenConfig):
        return generate(cfg.dataset)
    src_col, dst_col, time_col = cfg.dataset_columns
    return load_dataset(cfg.dataset, src_col=src_col, dst_col=dst_col, time_col=time_col)


def _records_from_arrays(
    ranks: np.ndarray, n_eff: np.ndarray, n_used: np.ndarray, tie_mode: str, filter_mode: str
) -> list[RankRecord]:
    return [
        RankRecord(sampled_rank=float(r), n_s=int(e), N=int(nu), tie_mode=tie_mode, filter_mode=filter_mode)
        for r, e, nu in zip(ranks, n_eff, n_used)
    ]


def _full_records(ranks: np.ndarray, n_used: np.ndarray, tie_mode: str, filter_mode: str) -> list[RankRecord]:
    return [
        RankRecord(full_rank=float(r), N=int(nu), tie_mode=tie_mode, filter_mode=filter_mode)
        for r, nu in zip(ranks, n_used)
    ]


def _metric_value(summary, metric: str) -> float:
    if metric == "sampled-mrr":
        return summary.mrr
    if metric == "sampled-mean-rank":
        return summary.mean_rank
    if metric.startswith("sampled-hits@"):
        return summary.hits[int(metric.split("@", 1)[1])]
    if metric == "mr-hat":
        return summary.mr_hat
    if metric == "auc-hat":
        return summary.auc_hat
    raise ValueError(f"unknown metric {metric!r}")


def _full_value(metric: str, raw_summary, filt_summary) -> float:
    name, mode = full_twin(metric)
    summary = raw_summary if mode == "raw" else filt_summary
    if name == "full-mrr":
        return summary.mrr
    if name == "full-mean-rank":
        return summary.mean_rank
    if name.startswith("full-hits@"):
        return summary.hits[int(name.split("@", 1)[1])]
    if name == "full-auc":
        return summary.auc_hat
    raise ValueError(f"unknown full metric {name!r}")


def run_matrix(cfg: ExperimentConfig) -> ReportMatrix:
    """Run the configured evaluation matrix and aggregate everything reportable."""
    dataset = resolve_dataset(cfg)
    splits = chronological_split(dataset, cfg.split_fractions)
    queries = build_queries(dataset, splits.test)
    labels = cfg.sampler_labels()

    plans: list[CandidatePlan] = []
    for seed in cfg.seeds:
        for si, sampler in enumerate(cfg.samplers):
            sampler = dataclasses.replace(sampler, collision_mode=cfg.filter_mode)
            plans.append(build_candidate_plan(dataset, splits, queries, sampler, labels[si], seed, si))

    tasks = [(dataset, splits, queries, name, plans, cfg) for name in cfg.scorers]
    if cfg.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(cfg.jobs, len(tasks))) as pool:
            results = list(pool.map(_sweep_task, tasks))
    else:
        results = [_sweep_task(t) for t in tasks]
    sweeps = {r.scorer: r for r in results}

    metrics = expand_metrics(cfg.metrics, cfg.ks)
    primary = metrics[0]
    n_raw = dataset.num_nodes - 1

    cells: dict[tuple[str, str, int, str], float] = {}
    full_entries: dict[tuple[str, str], float] = {}
    scatter: dict[str, list[tuple[str, float, float]]] = {}
    cell_records: dict[tuple[str, str, int], list[RankRecord]] = {}
    full_summaries: dict[str, tuple[object, object]] = {}
    effective_n_s: dict[str, float] = {}

    for scorer in cfg.scorers:
        res = sweeps[scorer]
        if res.has_full:
            raw_recs = _full_records(res.full_raw, np.full(len(queries), n_raw), cfg.tie_mode, "raw")
            filt_recs = _full_records(res.full_filtered, res.n_filtered, cfg.tie_mode, "filtered")
            raw_summary = rank_metrics(raw_recs, cfg.ks, "full")
            filt_summary = rank_metrics(filt_recs, cfg.ks, "full")
            full_summaries[scorer] = (raw_summary, filt_summary)
            for metric in metrics:
                name, _ = full_twin(metric)
                full_entries.setdefault((scorer, name), _full_value(metric, raw_summary, filt_summary))
        for seed in cfg.seeds:
            for label in labels:
                key = (scorer, label, seed)
                ranks, n_eff = res.sampled[(label, seed)]
                n_used = (
                    np.full(len(queries), n_raw, dtype=np.int64)
                    if cfg.filter_mode == "raw"
                    else (res.n_filtered if res.n_filtered is not None
                          else n_raw - np.asarray([len(q.filter_set) for q in queries], dtype=np.int64))
                )
                records = _records_from_arrays(ranks, n_eff, n_used, cfg.tie_mode, cfg.filter_mode)
                summary = rank_metrics(records, cfg.ks, "sampled")
                cell_records[key] = records
                for metric in metrics:
                    cells[(scorer, label, seed, metric)] = _metric_value(summary, metric)
                if f"{label}/{seed}" not in effective_n_s and any(
                    p.shared is not None and p.label == label for p in plans
                ):
                    effective_n_s[f"{label}/{seed}"] = float(np.mean(n_eff))

    # scatter: sampled primary metric vs its full counterpart
    for scorer in cfg.scorers:
        if not sweeps[scorer].has_full:
            continue
        raw_summary, filt_summary = full_summaries[scorer]
        points: list[tuple[str, float, float]] = []
        if cfg.scatter_grouping == "seed":
            for label in labels:
                for seed in cfg.seeds:
                    points.append((
                        label,
                        _full_value(primary, raw_summary, filt_summary),
                        cells[(scorer, label, seed, primary)],
                    ))
        elif cfg.scatter_grouping == "dataset":
            for label in labels:
                mean_sampled = math.fsum(cells[(scorer, label, seed, primary)] for seed in cfg.seeds) / len(cfg.seeds)
                points.append((label, _full_value(primary, raw_summary, filt_summary), mean_sampled))
        else:  # time-slice
            res = sweeps[scorer]
            bounds = np.linspace(0, len(queries), cfg.time_slices + 1).astype(int)
            _, full_mode = full_twin(primary)
            f_ranks = res.full_raw if full_mode == "raw" else res.full_filtered
            f_n = np.full(len(queries), n_raw) if full_mode == "raw" else res.n_filtered
            for label in labels:
                for seed in cfg.seeds:
                    recs = cell_records[(scorer, label, seed)]
                    for j in range(cfg.time_slices):
                        lo, hi = int(bounds[j]), int(bounds[j + 1])
                        if hi <= lo:
                            continue
                        fsum_ = rank_metrics(
                            _full_records(f_ranks[lo:hi], f_n[lo:hi], cfg.tie_mode, full_mode), cfg.ks, "full"
                        )
                        ssum = rank_metrics(recs[lo:hi], cfg.ks, "sampled")
                        points.append((f"{label}:slice{j}", _full_value(primary, fsum_, fsum_), _metric_value(ssum, primary)))
        scatter[scorer] = points

    # cross-sampler Spearman over scorer rankings (mean metric across seeds per cell)
    correlations: dict[tuple[str, str], float | None] = {}
    corr_notes: dict[str, str] = {}
    rankable = [s for s in cfg.scorers]
    if len(rankable) >= 2:
        vectors = {
            label: [
                math.fsum(cells[(scorer, label, seed, primary)] for seed in cfg.seeds) / len(cfg.seeds)
                for scorer in rankable
            ]
            for label in labels
        }
        for i, la in enumerate(labels):
            for lb in labels[i + 1:]:
                try:
                    correlations[(la, lb)] = spearman(vectors[la], vectors[lb])
                except ValueError as e:
                    correlations[(la, lb)] = None
                    corr_notes[f"{la}|{lb}"] = str(e)

    # Simpson check over scorer families (local vs global scale)
    simpson: SimpsonReport | None = None
    simpson_note = None
    families: dict[str, list[tuple[float, float]]] = {}
    for scorer, points in scatter.items():
        fam = scorer.split("-", 1)[0]
        families.setdefault(fam, []).extend((x, y) for _, x, y in points)
    if len(families) >= 2 and all(len(p) >= 2 for p in families.values()):
        try:
            simpson = simpson_check(families)
        except ValueError as e:
            simpson_note = str(e)
    else:
        simpson_note = "needs scorers from at least two scale families with >= 2 points each"

    watermarks = []
    if any(not r.has_full for r in sweeps.values()):
        watermarks.append("no ground-truth ranks: " + ", ".join(s for s, r in sweeps.items() if not r.has_full))

    metadata = {
        "artifact_version": __version__,
        "dataset": {
            "name": dataset.name,
            "num_nodes": dataset.num_nodes,
            "num_edges": dataset.num_edges,
            "splits": {"train": list(splits.train), "val": list(splits.val), "test": list(splits.test)},
            "test_surprise_index": surprise_index(dataset, splits),
        },
        "config": cfg.to_mapping(),
        "defaults": {
            "tie_mode": cfg.tie_mode,
            "filter_mode": cfg.filter_mode,
            "n_s": [s.n_s for s in cfg.samplers],
            "seeds": list(cfg.seeds),
            "ks": list(cfg.ks),
            "scorer_history": "train+val" if cfg.include_val_in_state else "train",
            "prequential": cfg.prequential,
            "full_rank_modes": {m: full_twin(m)[1] for m in metrics},
        },
        "primary_metric": primary,
        "estimator_assumptions": {
            label: (s.strategy in ("uniform", "shared_fixed") and cfg.filter_mode == "raw")
            for label, s in zip(labels, cfg.samplers)
        },
        "effective_n_s": effective_n_s,
        "watermarks": watermarks,
        "correlation_notes": corr_notes,
        "simpson_note": simpson_note,
    }

    return ReportMatrix(
        cells=cells,
        full_entries=full_entries,
        scatter=scatter,
        correlations=correlations,
        simpson=simpson,
        metadata=metadata,
    )
