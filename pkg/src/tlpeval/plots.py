"""Figure rendering for the report path: sampled-vs-full scatters, the
cross-sampler correlation matrix, grouped-correlation panels, and
expected-metric-vs-sample-size curves for the flip demo.

Kept out of the harness so evaluation runs stay plot-free; the CLI report and
demo commands call in here to drop PNGs next to the delimited output.
"""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .harness import ReportMatrix, SimpsonReport
from .hypergeom import FlipReport, RankHistogram, expected_metric


def render_scatter(m: ReportMatrix, out_dir: str | Path) -> list[Path]:
    if not m.scatter:
        return []
    scorers = list(m.scatter)
    fig, axes = plt.subplots(1, len(scorers), figsize=(4 * len(scorers), 3.6), squeeze=False)
    for ax, scorer in zip(axes[0], scorers):
        points = m.scatter[scorer]
        groups = sorted({g for g, _, _ in points})
        for g in groups:
            xs = [x for gg, x, y in points if gg == g]
            ys = [y for gg, x, y in points if gg == g]
            ax.scatter(xs, ys, label=g, s=28, alpha=0.8)
        lims = ax.get_xlim() + ax.get_ylim()
        lo, hi = min(lims), max(lims)
        ax.plot([lo, hi], [lo, hi], ls="--", c="gray", lw=1)
        ax.set_title(scorer, fontsize=10)
        ax.set_xlabel("full metric")
        ax.set_ylabel("sampled metric")
        ax.legend(fontsize=7)
    fig.tight_layout()
    path = Path(out_dir) / "scatter.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return [path]


def render_correlations(m: ReportMatrix, out_dir: str | Path) -> list[Path]:
    if not m.correlations:
        return []
    labels = sorted({a for a, _ in m.correlations} | {b for _, b in m.correlations})
    n = len(labels)
    mat = np.full((n, n), np.nan)
    np.fill_diagonal(mat, 1.0)
    for (a, b), v in m.correlations.items():
        if v is None:
            continue
        i, j = labels.index(a), labels.index(b)
        mat[i, j] = mat[j, i] = v
    fig, ax = plt.subplots(figsize=(1.1 * n + 2.0, 1.1 * n + 1.5))
    im = ax.imshow(mat, vmin=-1, vmax=1, cmap="RdBu_r")
    ax.set_xticks(range(n), labels, rotation=45, ha="right", fontsize=8)
    ax.set_yticks(range(n), labels, fontsize=8)
    for i in range(n):
        for j in range(n):
            if not np.isnan(mat[i, j]):
                ax.text(j, i, f"{mat[i, j]:.2f}", ha="center", va="center", fontsize=8)
    ax.set_title("Spearman correlation of scorer rankings across samplers", fontsize=9)
    fig.colorbar(im, shrink=0.8)
    fig.tight_layout()
    path = Path(out_dir) / "correlations.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return [path]


def render_simpson(
    groups: Mapping[str, Sequence[tuple[float, float]]],
    result: SimpsonReport,
    out_dir: str | Path,
    filename: str = "simpson.png",
) -> list[Path]:
    fig, ax = plt.subplots(figsize=(5.5, 4))
    all_x: list[float] = []
    all_y: list[float] = []
    for label, points in groups.items():
        xs = [p[0] for p in points]
        ys = [p[1] for p in points]
        r = result.within.get(label)
        ax.scatter(xs, ys, label=f"{label} (r={r:+.2f})", s=36)
        coef = np.polyfit(xs, ys, 1)
        gx = np.linspace(min(xs), max(xs), 8)
        ax.plot(gx, np.polyval(coef, gx), lw=1)
        all_x.extend(xs)
        all_y.extend(ys)
    coef = np.polyfit(all_x, all_y, 1)
    gx = np.linspace(min(all_x), max(all_x), 8)
    ax.plot(gx, np.polyval(coef, gx), ls="--", c="black", lw=1.5,
            label=f"pooled (r={result.pooled_r:+.2f})")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_title("Within-group vs pooled correlation" + (" - paradox" if result.paradox else ""))
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = Path(out_dir) / filename
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return [path]


def render_flip_curves(
    hist_a: RankHistogram,
    hist_b: RankHistogram,
    report: FlipReport,
    out_dir: str | Path,
    max_n_s: int = 60,
) -> list[Path]:
    ns_values = [n for n in range(1, max_n_s + 1) if n <= hist_a.N]
    curve_a = [expected_metric(hist_a, n, "sampled-mrr") for n in ns_values]
    curve_b = [expected_metric(hist_b, n, "sampled-mrr") for n in ns_values]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(ns_values, curve_a, label="A: expected sampled MRR")
    ax.plot(ns_values, curve_b, label="B: expected sampled MRR")
    ax.axhline(report.full_mrr_a, ls="--", lw=1, color="C0", label="A: full MRR")
    ax.axhline(report.full_mrr_b, ls="--", lw=1, color="C1", label="B: full MRR")
    ax.axvline(report.n_s, ls=":", lw=1, color="gray", label=f"demo n_s={report.n_s}")
    ax.set_xlabel("negative sample size")
    ax.set_ylabel("MRR")
    ax.set_title("Sampling reverses the full-MRR ordering" if report.flip else "Expected sampled MRR vs sample size")
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = Path(out_dir) / "flip_curves.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return [path]


def render_report_figures(m: ReportMatrix, out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = render_scatter(m, out) + render_correlations(m, out)
    if m.simpson is not None and m.scatter:
        families: dict[str, list[tuple[float, float]]] = {}
        for scorer, points in m.scatter.items():
            families.setdefault(scorer.split("-", 1)[0], []).extend((x, y) for _, x, y in points)
        paths += render_simpson(families, m.simpson, out, filename="simpson_families.png")
    return paths
