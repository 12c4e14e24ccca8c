"""Line-delimited JSON endpoint for foreign-language bindings.

Run as `python -m tlpeval.ffi`. Each stdin line is a request
`{"id": n, "op": "...", "params": {...}}`; each stdout line the matching
response `{"id": n, "ok": true, "result": ...}` or
`{"id": n, "ok": false, "error": {"type": ..., "message": ...}}`.

Stateful objects (datasets, scorers) live in a session handle table; handles
stay valid until released or the process exits, and use-after-release is a
wrapper-visible error, never a crash. All numeric work happens in the core
modules - this layer only marshals, so values match the CLI's JSON exactly.
"""

from __future__ import annotations

import json
import sys
from typing import Any, Callable

from ._version import __version__
from .dataset import Dataset, build_queries, chronological_split, load_dataset, surprise_index
from .demos import run_flip_demo, run_simpson_demo, run_two_source_demo
from .generator import GenConfig, calibrate_surprise, generate
from .harness import ExperimentConfig, run_matrix, simpson_check, spearman, pearson
from .hypergeom import (
    RankHistogram,
    expected_metric,
    expected_sampled_hits,
    expected_sampled_mrr,
    hypergeom_pmf,
    ordering_flip_check,
)
from .metrics import (
    RankRecord,
    effective_k,
    mr_hat,
    per_source_auc,
    pooled_ap,
    pooled_roc_auc,
    rank_metrics,
)
from .report import report_to_dict
from .sampling import SamplerConfig, destination_counts, popularity_sample, uniform_sample
from .scorers import fit_scorer, parse_scorer_name


class Session:
    """Handle table plus the op registry; one per connected wrapper."""

    def __init__(self):
        self._objects: dict[int, tuple[str, Any]] = {}
        self._released: set[int] = set()
        self._next = 1

    def put(self, tag: str, obj: Any) -> int:
        h = self._next
        self._next += 1
        self._objects[h] = (tag, obj)
        return h

    def get(self, handle: int, tag: str) -> Any:
        if handle in self._released:
            raise ValueError(f"handle {handle} was already released")
        if handle not in self._objects:
            raise ValueError(f"unknown handle {handle}")
        found, obj = self._objects[handle]
        if found != tag:
            raise ValueError(f"handle {handle} is a {found}, expected {tag}")
        return obj

    def release(self, handle: int) -> None:
        if handle in self._released:
            raise ValueError(f"handle {handle} was already released")
        if handle not in self._objects:
            raise ValueError(f"unknown handle {handle}")
        del self._objects[handle]
        self._released.add(handle)

    # -- ops ---------------------------------------------------------------

    def op_version(self, params: dict) -> dict:
        return {"version": __version__}

    def op_load_dataset(self, params: dict) -> dict:
        d = load_dataset(
            params["path"],
            src_col=params.get("src_col", "src"),
            dst_col=params.get("dst_col", "dst"),
            time_col=params.get("time_col", "t"),
        )
        return self._dataset_info(d, self.put("dataset", d))

    def op_generate(self, params: dict) -> dict:
        cfg = GenConfig.from_mapping(dict(params["config"]))
        d = generate(cfg)
        return self._dataset_info(d, self.put("dataset", d))

    def op_calibrate_surprise(self, params: dict) -> dict:
        cfg = GenConfig.from_mapping(dict(params["config"]))
        adjusted = calibrate_surprise(
            cfg,
            float(params["target"]),
            tuple(params.get("split_fractions", (0.7, 0.15, 0.15))),
        )
        return {"config": adjusted.to_mapping()}

    @staticmethod
    def _dataset_info(d: Dataset, handle: int | None = None) -> dict:
        info = {
            "name": d.name,
            "num_nodes": d.num_nodes,
            "num_edges": d.num_edges,
            "t_min": d.t[0].item(),
            "t_max": d.t[-1].item(),
        }
        if handle is not None:
            info["handle"] = handle
        return info

    def op_dataset_info(self, params: dict) -> dict:
        return self._dataset_info(self.get(params["dataset"], "dataset"))

    def op_surprise_index(self, params: dict) -> dict:
        d = self.get(params["dataset"], "dataset")
        s = chronological_split(d, tuple(params.get("split_fractions", (0.7, 0.15, 0.15))))
        return {"surprise_index": surprise_index(d, s)}

    def op_fit_scorer(self, params: dict) -> dict:
        d = self.get(params["dataset"], "dataset")
        scale, signal = parse_scorer_name(params["scorer"])
        stop = int(params.get("stop", d.num_edges))
        scorer = fit_scorer(d.iter_edges(0, stop), scale, signal, d.num_nodes)
        return {"handle": self.put("scorer", scorer), "scorer": params["scorer"], "clock": scorer.clock}

    def op_score(self, params: dict) -> dict:
        scorer = self.get(params["scorer"], "scorer")
        return {"score": scorer.score(int(params["src"]), int(params["dst"]))}

    def op_sample_candidates(self, params: dict) -> dict:
        d = self.get(params["dataset"], "dataset")
        s = chronological_split(d, tuple(params.get("split_fractions", (0.7, 0.15, 0.15))))
        queries = build_queries(d, s.test)
        ordinal = int(params.get("query", 0))
        if not 0 <= ordinal < len(queries):
            raise ValueError(f"query ordinal {ordinal} outside 0..{len(queries) - 1}")
        q = queries[ordinal]
        cfg = SamplerConfig(
            strategy=params.get("strategy", "uniform"),
            n_s=int(params.get("n_s", 20)),
            seed=int(params.get("seed", 0)),
            pad_with_uniform=bool(params.get("pad_with_uniform", True)),
            collision_mode=params.get("collision_mode", "raw"),
        )
        if cfg.strategy == "uniform":
            cs = uniform_sample(q, d.num_nodes, cfg)
        elif cfg.strategy == "popularity":
            cs = popularity_sample(q, destination_counts(d, s.train), cfg)
        else:
            raise ValueError(f"sample_candidates supports uniform|popularity, got {cfg.strategy!r}")
        return {
            "query": ordinal,
            "true_dst": q.true_dst,
            "strategy": cs.strategy,
            "candidates": [int(c) for c in cs.candidates],
        }

    def op_rank_metrics(self, params: dict) -> dict:
        ranks = params["ranks"]
        if any(r < 1 for r in ranks):
            raise ValueError("ranks must be >= 1")
        records = [RankRecord(sampled_rank=float(r)) for r in ranks]
        summary = rank_metrics(records, [int(k) for k in params.get("ks", (1, 10))], "sampled")
        return summary.to_dict()

    def op_mr_hat(self, params: dict) -> dict:
        rec = RankRecord(
            sampled_rank=float(params["sampled_rank"]),
            n_s=int(params["n_s"]),
            N=int(params["n_universe"]),
        )
        est, auc = mr_hat(rec)
        return {"estimated_full_rank": est, "auc_hat": auc}

    def op_effective_k(self, params: dict) -> dict:
        return {"effective_k": effective_k(int(params["n_universe"]), int(params["n_s"]), int(params["k"]))}

    def op_pooled_roc_auc(self, params: dict) -> dict:
        return {"auc": pooled_roc_auc([(float(s), int(l)) for s, l in params["scored"]])}

    def op_pooled_ap(self, params: dict) -> dict:
        return {"ap": pooled_ap([(float(s), int(l)) for s, l in params["scored"]])}

    def op_per_source_auc(self, params: dict) -> dict:
        return per_source_auc([(g, float(s), int(l)) for g, s, l in params["scored"]]).to_dict()

    def op_hypergeom_pmf(self, params: dict) -> dict:
        return {
            "pmf": hypergeom_pmf(int(params["N"]), int(params["A"]), int(params["n"]), int(params["x"]))
        }

    def op_expected_sampled_mrr(self, params: dict) -> dict:
        return {
            "value": expected_sampled_mrr(int(params["rank"]), int(params["n_universe"]), int(params["n_s"]))
        }

    def op_expected_sampled_hits(self, params: dict) -> dict:
        return {
            "value": expected_sampled_hits(
                int(params["rank"]), int(params["n_universe"]), int(params["n_s"]), int(params["k"])
            )
        }

    def op_expected_metric(self, params: dict) -> dict:
        hist = RankHistogram({int(r): float(m) for r, m in params["masses"].items()}, N=int(params["n_universe"]))
        return {"value": expected_metric(hist, int(params["n_s"]), params["metric"])}

    def op_flip_check(self, params: dict) -> dict:
        hist_a = RankHistogram({int(r): float(m) for r, m in params["hist_a"].items()}, N=int(params["n_universe"]))
        hist_b = RankHistogram({int(r): float(m) for r, m in params["hist_b"].items()}, N=int(params["n_universe"]))
        return ordering_flip_check(hist_a, hist_b, int(params["n_s"])).to_dict()

    def op_spearman(self, params: dict) -> dict:
        return {"rho": spearman(params["a"], params["b"])}

    def op_pearson(self, params: dict) -> dict:
        return {"r": pearson(params["x"], params["y"])}

    def op_simpson_check(self, params: dict) -> dict:
        groups = {str(k): [(float(x), float(y)) for x, y in v] for k, v in params["groups"].items()}
        return simpson_check(groups).to_dict()

    def op_demo_flip(self, params: dict) -> dict:
        return run_flip_demo(n_s=int(params.get("n_s", 10))).to_dict()

    def op_demo_simpson(self, params: dict) -> dict:
        return run_simpson_demo().to_dict()

    def op_demo_two_source(self, params: dict) -> dict:
        return run_two_source_demo()

    def op_evaluate(self, params: dict) -> dict:
        cfg = ExperimentConfig.from_mapping(dict(params["config"]))
        return report_to_dict(run_matrix(cfg))

    def op_release(self, params: dict) -> dict:
        self.release(int(params["handle"]))
        return {"released": int(params["handle"])}

    def dispatch(self, op: str, params: dict) -> Any:
        handler: Callable[[dict], dict] | None = getattr(self, f"op_{op.replace('-', '_')}", None)
        if handler is None:
            raise ValueError(f"unknown op {op!r}")
        return handler(params or {})


def serve(stdin=None, stdout=None) -> int:
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    session = Session()
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        req_id = None
        try:
            req = json.loads(line)
            req_id = req.get("id")
            op = req.get("op")
            if op == "shutdown":
                stdout.write(json.dumps({"id": req_id, "ok": True, "result": {"bye": True}}) + "\n")
                stdout.flush()
                return 0
            result = session.dispatch(op, req.get("params") or {})
            resp = {"id": req_id, "ok": True, "result": result}
        except Exception as e:
            resp = {"id": req_id, "ok": False, "error": {"type": type(e).__name__, "message": str(e)}}
        stdout.write(json.dumps(resp) + "\n")
        stdout.flush()
    return 0


if __name__ == "__main__":
    sys.exit(serve())
