"""Command-line front door: reproducible ingestion, generation, evaluation
matrices, correlation analysis, and the shipped pathology demos.

Usage errors exit 2 with usage text; runtime failures exit 1 with the
submodule's message. Every run prints a one-line summary and records all
protocol defaults in its JSON metadata, so no knob diverges silently.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

from ._version import __version__
from .dataset import ingest_csv
from .demos import (
    flip_curve_rows,
    flip_histograms,
    run_flip_demo,
    run_simpson_demo,
    run_two_source_demo,
    simpson_groups,
)
from .generator import GenConfig, calibrate_surprise, config_to_kv, generate, parse_kv_config
from .harness import ExperimentConfig, correlations_from_report, run_matrix
from .report import correlations_csv_text, load_report, save_report

DEFAULT_SCORERS = "local-recency,local-popularity,global-recency,global-popularity"


def _env_seed(default: int = 0) -> int:
    raw = os.environ.get("TLPEVAL_SEED")
    return int(raw) if raw else default


def _ints(raw: str) -> list[int]:
    return [int(x) for x in raw.split(",") if x.strip() != ""]


def _floats(raw: str) -> list[float]:
    return [float(x) for x in raw.split(",") if x.strip() != ""]


def _existing(parser: argparse.ArgumentParser, raw: str | None, what: str) -> Path | None:
    if raw is None:
        return None
    p = Path(raw)
    if not p.exists():
        parser.error(f"{what} path does not exist: {p}")
    return p


def _load_experiment_mapping(path: Path) -> dict:
    text = path.read_text(encoding="utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        pass
    mapping: dict = {}
    list_keys = {"scorers", "samplers", "seeds", "ks", "metrics", "split_fractions"}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected key=value, got {line!r}")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key in list_keys:
            parts = [p.strip() for p in raw.split(",")]
            if key in ("seeds", "ks"):
                mapping[key] = [int(p) for p in parts]
            elif key == "split_fractions":
                mapping[key] = [float(p) for p in parts]
            else:
                mapping[key] = parts
        elif key in ("jobs", "time_slices", "n_s"):
            mapping[key] = int(raw)
        elif key in ("prequential", "include_val_in_state"):
            mapping[key] = raw.lower() in ("1", "true", "yes")
        else:
            mapping[key] = raw
    n_s = mapping.pop("n_s", None)
    if "samplers" in mapping and all(isinstance(s, str) for s in mapping["samplers"]):
        mapping["samplers"] = [{"strategy": s, "n_s": n_s or 20} for s in mapping["samplers"]]
    return mapping


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tlpeval",
        description="Temporal-link-prediction evaluation engine: metrics, samplers, baselines, oracles.",
    )
    parser.add_argument("--version", action="version", version=f"tlpeval {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add_columns(p):
        p.add_argument("--src-col", default="src", help="source column name (default: src)")
        p.add_argument("--dst-col", default="dst", help="destination column name (default: dst)")
        p.add_argument("--time-col", default="t", help="timestamp column name (default: t)")

    p = sub.add_parser("ingest", help="validate a CSV edge stream and write a binary cache")
    p.add_argument("--dataset", required=True, help="CSV edge stream (header row required)")
    add_columns(p)
    p.add_argument("--out", default="tlpeval-out", help="output directory")

    p = sub.add_parser("generate", help="emit a seeded synthetic temporal graph as CSV")
    p.add_argument("--gen-config", help="flat key=value generator config file")
    p.add_argument("--nodes", type=int, help="number of nodes")
    p.add_argument("--edges", type=int, help="number of edges")
    p.add_argument("--seed", type=int, help="generator seed (falls back to TLPEVAL_SEED)")
    p.add_argument("--repeat-prob", type=float, help="probability a step re-emits an earlier pair")
    p.add_argument("--source-exponent", type=float, help="source rank-distribution exponent (>1)")
    p.add_argument("--dst-exponent", type=float, help="destination rank-distribution exponent (>1)")
    p.add_argument("--horizon", type=int, help="maximum timestamp (>= edges)")
    p.add_argument("--target-surprise", type=float,
                   help="calibrate repeat-prob until the test surprise index is within 0.01 of this")
    p.add_argument("--split", default="0.7,0.15,0.15", help="split fractions used for calibration")
    p.add_argument("--out", default="tlpeval-out", help="output directory")

    p = sub.add_parser("evaluate", help="run a scorer x sampler x seed evaluation matrix")
    p.add_argument("--dataset", help="CSV or .npz dataset path")
    p.add_argument("--gen-config", help="generate the dataset from this key=value config instead")
    p.add_argument("--config", help="experiment config file (JSON or key=value); flags override it")
    add_columns(p)
    p.add_argument("--scorers", help=f"comma list (default: {DEFAULT_SCORERS})")
    p.add_argument("--samplers", help="comma list of strategies (default: uniform)")
    p.add_argument("--n-s", type=int, help="negatives per query (default: 20)")
    p.add_argument("--seeds", help="comma list of run seeds (default: TLPEVAL_SEED or 0)")
    p.add_argument("--ks", help="comma list of Hits@K cutoffs (default: 1,10)")
    p.add_argument("--tie-mode", choices=("optimistic", "mean", "pessimistic"), help="default: mean")
    p.add_argument("--filter-mode", choices=("raw", "filtered"),
                   help="candidate/sampled-rank mode (default: raw; full MRR stays filtered)")
    p.add_argument("--split", help="split fractions (default: 0.7,0.15,0.15)")
    p.add_argument("--jobs", type=int, default=None, help="worker processes (default: available parallelism)")
    p.add_argument("--format", default="json,csv,scatter-data", help="comma list of output formats")
    p.add_argument("--out", default="tlpeval-out", help="output directory")
    p.add_argument("--figures", action="store_true", help="also render PNG figures")
    p.add_argument("--injected-scores", help="CSV of (query_ordinal,candidate,score) evaluated as scorer 'injected'")
    p.add_argument("--export-candidates", help="write drawn candidate sets to this CSV for audits")

    p = sub.add_parser("correlate", help="recompute cross-sampler Spearman matrices from a report")
    p.add_argument("--report", required=True, help="report.json produced by evaluate")
    p.add_argument("--out", default="tlpeval-out", help="output directory")

    p = sub.add_parser("demo-paradox", help="run the shipped grouped-correlation (Simpson) fixture")
    p.add_argument("--out", default="tlpeval-out", help="output directory")
    p.add_argument("--no-figures", action="store_true", help="skip PNG rendering")

    p = sub.add_parser("demo-flip", help="run the shipped metric-ordering flip fixture")
    p.add_argument("--n-s", type=int, default=10, help="sample size for the flip check (default: 10)")
    p.add_argument("--out", default="tlpeval-out", help="output directory")
    p.add_argument("--no-figures", action="store_true", help="skip PNG rendering")

    p = sub.add_parser("report", help="re-serialize a report (CSV/scatter data) and render figures")
    p.add_argument("--report", required=True, help="report.json produced by evaluate")
    p.add_argument("--format", default="json,csv,scatter-data", help="comma list of output formats")
    p.add_argument("--out", default="tlpeval-out", help="output directory")
    p.add_argument("--no-figures", action="store_true", help="skip PNG rendering")

    return parser


def _cmd_ingest(args, parser) -> int:
    path = _existing(parser, args.dataset, "dataset")
    d = ingest_csv(path, src_col=args.src_col, dst_col=args.dst_col, time_col=args.time_col)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cache = out / f"{d.name}.npz"
    d.save_cache(cache)
    print(
        f"ingest: {d.name}: {d.num_nodes} nodes, {d.num_edges} edges, "
        f"t in [{d.t[0].item()}, {d.t[-1].item()}] -> {cache}"
    )
    return 0


def _gen_config_from_args(args, parser) -> GenConfig:
    if args.gen_config:
        cfg = parse_kv_config(Path(_existing(parser, args.gen_config, "generator config")).read_text(encoding="utf-8"))
    else:
        cfg = GenConfig(seed=_env_seed())
    overrides = {
        "num_nodes": args.nodes,
        "num_edges": args.edges,
        "seed": args.seed,
        "repeat_prob": args.repeat_prob,
        "source_exponent": args.source_exponent,
        "dst_exponent": args.dst_exponent,
        "horizon": args.horizon,
    }
    return dataclasses.replace(cfg, **{k: v for k, v in overrides.items() if v is not None})


def _cmd_generate(args, parser) -> int:
    cfg = _gen_config_from_args(args, parser)
    note = ""
    if args.target_surprise is not None:
        cfg = calibrate_surprise(cfg, args.target_surprise, tuple(_floats(args.split)))
        note = f", calibrated repeat_prob={cfg.repeat_prob:.6f}"
    d = generate(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    edges = out / "edges.csv"
    d.to_csv(edges)
    (out / "generator.kv").write_text(config_to_kv(cfg), encoding="utf-8")
    print(f"generate: {d.num_nodes} nodes, {d.num_edges} edges -> {edges}{note}")
    return 0


def _cmd_evaluate(args, parser) -> int:
    mapping: dict = {}
    if args.config:
        mapping = _load_experiment_mapping(_existing(parser, args.config, "experiment config"))

    if args.dataset:
        mapping["dataset"] = str(_existing(parser, args.dataset, "dataset"))
    elif args.gen_config:
        gen = parse_kv_config(Path(_existing(parser, args.gen_config, "generator config")).read_text(encoding="utf-8"))
        mapping["dataset"] = {"generator": gen.to_mapping()}
    if "dataset" not in mapping:
        parser.error("evaluate requires --dataset, --gen-config, or a config file naming a dataset")

    if args.scorers:
        mapping["scorers"] = [s.strip() for s in args.scorers.split(",")]
    mapping.setdefault("scorers", DEFAULT_SCORERS.split(","))
    if args.samplers or "samplers" not in mapping:
        strategies = [s.strip() for s in (args.samplers or "uniform").split(",")]
        mapping["samplers"] = [{"strategy": s, "n_s": args.n_s or 20} for s in strategies]
    elif args.n_s:
        for s in mapping["samplers"]:
            if isinstance(s, dict):
                s["n_s"] = args.n_s
    if args.seeds:
        mapping["seeds"] = _ints(args.seeds)
    mapping.setdefault("seeds", [_env_seed()])
    if args.ks:
        mapping["ks"] = _ints(args.ks)
    if args.tie_mode:
        mapping["tie_mode"] = args.tie_mode
    if args.filter_mode:
        mapping["filter_mode"] = args.filter_mode
    if args.split:
        mapping["split_fractions"] = _floats(args.split)
    if args.injected_scores:
        mapping["injected_scores"] = str(_existing(parser, args.injected_scores, "injected scores"))
        if "injected" not in mapping["scorers"]:
            mapping["scorers"] = list(mapping["scorers"]) + ["injected"]
    mapping["jobs"] = args.jobs if args.jobs is not None else (os.cpu_count() or 1)
    mapping["dataset_columns"] = [args.src_col, args.dst_col, args.time_col]

    cfg = ExperimentConfig.from_mapping(mapping)
    m = run_matrix(cfg)
    formats = [f.strip() for f in args.format.split(",")]
    written = save_report(m, args.out, formats)
    if args.export_candidates:
        _export_candidates(cfg, args.export_candidates)
        written.append(Path(args.export_candidates))
    if args.figures:
        from .plots import render_report_figures

        written += render_report_figures(m, args.out)
    print(
        f"evaluate: {len(cfg.scorers)} scorers x {len(cfg.samplers)} samplers x {len(cfg.seeds)} seeds "
        f"-> {len(m.cells)} cells, {len(m.full_entries)} full entries -> {', '.join(str(p) for p in written)}"
    )
    return 0


def _export_candidates(cfg: ExperimentConfig, path: str) -> None:
    from .dataset import build_queries, chronological_split
    from .harness import build_candidate_plan, resolve_dataset
    from .sampling import CandidateSet, export_candidates_csv

    dataset = resolve_dataset(cfg)
    splits = chronological_split(dataset, cfg.split_fractions)
    queries = build_queries(dataset, splits.test)
    labels = cfg.sampler_labels()
    sets: list[CandidateSet] = []
    for seed in cfg.seeds:
        for si, sampler in enumerate(cfg.samplers):
            sampler = dataclasses.replace(sampler, collision_mode=cfg.filter_mode)
            plan = build_candidate_plan(dataset, splits, queries, sampler, labels[si], seed, si)
            if plan.shared is not None:
                sets.append(CandidateSet(-1, plan.shared, plan.label, plan.sampler.n_s, plan.sampler.collision_mode))
            else:
                sets.extend(
                    CandidateSet(q.origin_idx, plan.matrix[i], plan.label, plan.sampler.n_s, plan.sampler.collision_mode)
                    for i, q in enumerate(queries)
                )
    with open(path, "w", encoding="utf-8") as f:
        export_candidates_csv(sets, f)


def _cmd_correlate(args, parser) -> int:
    m = load_report(_existing(parser, args.report, "report"))
    corr = correlations_from_report(m)
    m.correlations = corr
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "correlations.csv"
    path.write_text(correlations_csv_text(m), encoding="utf-8")
    pairs = ", ".join(f"{a}~{b}: {v:.4f}" if v is not None else f"{a}~{b}: n/a" for (a, b), v in corr.items())
    print(f"correlate: {pairs or 'nothing to correlate (need >= 2 samplers)'} -> {path}")
    return 0


def _cmd_demo_paradox(args, parser) -> int:
    result = run_simpson_demo()
    two_source = run_two_source_demo()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    payload = {
        "simpson": result.to_dict(),
        "groups": {k: [[x, y] for x, y in v] for k, v in simpson_groups().items()},
        "pooled_vs_per_source": two_source,
    }
    path = out / "paradox.json"
    path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    written = [path]
    if not args.no_figures:
        from .plots import render_simpson

        written += render_simpson(simpson_groups(), result, out)
    within = ", ".join(f"{k}: r={v:+.3f}" for k, v in result.within.items())
    print(
        f"demo-paradox: within-group {within}; pooled r={result.pooled_r:+.3f}; "
        f"{'PARADOX DETECTED' if result.paradox else 'no paradox'} -> {', '.join(str(p) for p in written)}"
    )
    return 0


def _cmd_demo_flip(args, parser) -> int:
    report = run_flip_demo(n_s=args.n_s)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "flip.json"
    path.write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")
    curve = out / "flip_curves.csv"
    curve.write_text(
        "n_s,expected_sampled_mrr_a,expected_sampled_mrr_b\n"
        + "".join(f"{n},{a!r},{b!r}\n" for n, a, b in flip_curve_rows()),
        encoding="utf-8",
    )
    written = [path, curve]
    if not args.no_figures:
        from .plots import render_flip_curves

        hist_a, hist_b = flip_histograms()
        written += render_flip_curves(hist_a, hist_b, report, out)

    def order_str(which: str, a: float, b: float) -> str:
        return f"A>B ({a:.4f} vs {b:.4f})" if which == "A" else (f"B>A ({b:.4f} vs {a:.4f})" if which == "B" else "tie")

    full = order_str(report.full_mrr_order, report.full_mrr_a, report.full_mrr_b)
    samp = order_str(report.sampled_mrr_order, report.expected_sampled_mrr_a, report.expected_sampled_mrr_b)
    print(
        f"demo-flip: full MRR {full}; expected sampled MRR (n_s={report.n_s}) {samp}; "
        f"{'FLIP DETECTED' if report.flip else 'no flip'}; mr-hat order preserved={not report.mr_hat_flip} "
        f"-> {', '.join(str(p) for p in written)}"
    )
    return 0


def _cmd_report(args, parser) -> int:
    m = load_report(_existing(parser, args.report, "report"))
    formats = [f.strip() for f in args.format.split(",")]
    written = save_report(m, args.out, formats)
    if not args.no_figures:
        from .plots import render_report_figures

        written += render_report_figures(m, args.out)
    print(f"report: re-serialized {args.report} -> {', '.join(str(p) for p in written)}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "ingest": _cmd_ingest,
        "generate": _cmd_generate,
        "evaluate": _cmd_evaluate,
        "correlate": _cmd_correlate,
        "demo-paradox": _cmd_demo_paradox,
        "demo-flip": _cmd_demo_flip,
        "report": _cmd_report,
    }
    try:
        return handlers[args.command](args, parser)
    except BrokenPipeError:
        return 1
    except Exception as e:  # runtime failures -> exit 1 with the submodule's message
        print(f"tlpeval: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
