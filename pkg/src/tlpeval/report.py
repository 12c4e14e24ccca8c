"""Report emission and reloading: JSON (full matrix + metadata), long-format
CSV, and per-scorer scatter data for external plotting.

Serialization walks cells in their configured order and never embeds
timestamps, so identical runs produce byte-identical files.
"""

from __future__ import annotations

import json
from pathlib import Path

from .harness import ReportMatrix, SimpsonReport

FORMATS = ("json", "csv", "scatter-data")


def report_to_dict(m: ReportMatrix) -> dict:
    return {
        "cells": [
            {"scorer": s, "sampler": sa, "seed": seed, "metric": met, "value": v}
            for (s, sa, seed, met), v in m.cells.items()
        ],
        "full": [
            {"scorer": s, "metric": met, "value": v} for (s, met), v in m.full_entries.items()
        ],
        "scatter": {
            scorer: [{"group": g, "full_value": x, "sampled_value": y} for g, x, y in points]
            for scorer, points in m.scatter.items()
        },
        "correlations": [
            {"sampler_a": a, "sampler_b": b, "spearman": v} for (a, b), v in m.correlations.items()
        ],
        "simpson": m.simpson.to_dict() if m.simpson is not None else None,
        "metadata": m.metadata,
    }


def report_from_dict(d: dict) -> ReportMatrix:
    simpson = None
    if d.get("simpson") is not None:
        s = d["simpson"]
        simpson = SimpsonReport(within=dict(s["within"]), pooled_r=s["pooled_r"], paradox=s["paradox"])
    return ReportMatrix(
        cells={(c["scorer"], c["sampler"], c["seed"], c["metric"]): c["value"] for c in d["cells"]},
        full_entries={(c["scorer"], c["metric"]): c["value"] for c in d["full"]},
        scatter={
            scorer: [(p["group"], p["full_value"], p["sampled_value"]) for p in points]
            for scorer, points in d["scatter"].items()
        },
        correlations={(c["sampler_a"], c["sampler_b"]): c["spearman"] for c in d["correlations"]},
        simpson=simpson,
        metadata=d["metadata"],
    )


def _fmt(v) -> str:
    return repr(float(v)) if isinstance(v, float) else str(v)


def report_csv_text(m: ReportMatrix) -> str:
    """Long-format rows: one per cell, then one per full-ranking entry."""
    lines = ["scorer,sampler,seed,metric,value"]
    for (s, sa, seed, met), v in m.cells.items():
        lines.append(f"{s},{sa},{seed},{met},{_fmt(v)}")
    for (s, met), v in m.full_entries.items():
        lines.append(f"{s},full,,{met},{_fmt(v)}")
    return "\n".join(lines) + "\n"


def scatter_csv_text(m: ReportMatrix, scorer: str) -> str:
    lines = ["scorer,group,full_value,sampled_value"]
    for g, x, y in m.scatter[scorer]:
        lines.append(f"{scorer},{g},{_fmt(x)},{_fmt(y)}")
    return "\n".join(lines) + "\n"


def correlations_csv_text(m: ReportMatrix) -> str:
    lines = ["sampler_a,sampler_b,spearman"]
    for (a, b), v in m.correlations.items():
        lines.append(f"{a},{b},{'' if v is None else _fmt(v)}")
    return "\n".join(lines) + "\n"


def save_report(m: ReportMatrix, out_dir: str | Path, formats=FORMATS) -> list[Path]:
    """Write the requested formats into out_dir; returns the created paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    for fmt in formats:
        if fmt == "json":
            p = out / "report.json"
            p.write_text(json.dumps(report_to_dict(m), indent=2) + "\n", encoding="utf-8")
            written.append(p)
        elif fmt == "csv":
            p = out / "report.csv"
            p.write_text(report_csv_text(m), encoding="utf-8")
            written.append(p)
            if m.correlations:
                pc = out / "correlations.csv"
                pc.write_text(correlations_csv_text(m), encoding="utf-8")
                written.append(pc)
        elif fmt == "scatter-data":
            for scorer in m.scatter:
                p = out / f"scatter_{scorer}.csv"
                p.write_text(scatter_csv_text(m, scorer), encoding="utf-8")
                written.append(p)
        else:
            raise ValueError(f"unknown report format {fmt!r} (expected subset of {FORMATS})")
    return written


def load_report(path: str | Path) -> ReportMatrix:
    with open(path, "r", encoding="utf-8") as f:
        return report_from_dict(json.load(f))
