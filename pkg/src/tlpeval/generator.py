"""Seeded synthetic temporal graphs with heavy-tailed degrees and controllable
edge repetition.

Sources and destinations are drawn from shifted-Zipf (Zipf-Mandelbrot) rank
distributions p(k) ~ (k + offset)^-a over node ids; the offset flattens the
head so that high-surprise regimes stay reachable while keeping a > 1. With
probability repeat_prob a step re-emits the pair of a uniformly chosen earlier
edge, which is what drives the surprise index down.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset, chronological_split, surprise_index


@dataclass(frozen=True)
class GenConfig:
    num_nodes: int = 10_000
    num_edges: int = 100_000
    source_exponent: float = 1.5
    dst_exponent: float = 1.5
    repeat_prob: float = 0.0
    horizon: int | None = None
    seed: int = 0
    source_offset: float | None = None
    dst_offset: float | None = None
    burst_prob: float = 0.0

    def __post_init__(self):
        if self.num_nodes < 2:
            raise ValueError("num_nodes must be >= 2")
        if self.num_edges < 1:
            raise ValueError("num_edges must be >= 1")
        for label, a in (("source_exponent", self.source_exponent), ("dst_exponent", self.dst_exponent)):
            if a <= 1.0:
                raise ValueError(f"{label} must be > 1, got {a}")
        for label, p in (("repeat_prob", self.repeat_prob), ("burst_prob", self.burst_prob)):
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{label} must lie in [0, 1], got {p}")
        if self.horizon is not None and self.horizon < self.num_edges:
            raise ValueError("horizon must be >= num_edges (timestamps are strictly increasing)")
        for label, off in (("source_offset", self.source_offset), ("dst_offset", self.dst_offset)):
            if off is not None and off < 0:
                raise ValueError(f"{label} must be >= 0")

    @property
    def effective_horizon(self) -> int:
        return self.num_edges if self.horizon is None else self.horizon

    def offset(self, which: str) -> float:
        off = self.source_offset if which == "source" else self.dst_offset
        return float(off) if off is not None else max(1.0, self.num_nodes / 10.0)

    def to_mapping(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_mapping(cls, m: dict) -> "GenConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(m) - known
        if unknown:
            raise ValueError(f"unknown generator config keys: {sorted(unknown)}")
        return cls(**m)


_FIELD_TYPES = {
    "num_nodes": int, "num_edges": int, "seed": int, "horizon": int,
    "source_exponent": float, "dst_exponent": float, "repeat_prob": float,
    "source_offset": float, "dst_offset": float, "burst_prob": float,
}


def parse_kv_config(text: str) -> GenConfig:
    """Generator config from flat key=value lines ('#' comments allowed)."""
    values: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected key=value, got {line!r}")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in _FIELD_TYPES:
            raise ValueError(f"config line {lineno}: unknown key {key!r}")
        values[key] = _FIELD_TYPES[key](raw)
    return GenConfig.from_mapping(values)


def config_to_kv(cfg: GenConfig) -> str:
    lines = []
    for key, value in cfg.to_mapping().items():
        if value is None:
            continue
        lines.append(f"{key}={value}")
    return "\n".join(lines) + "\n"


def _rank_cdf(num_nodes: int, exponent: float, offset: float) -> np.ndarray:
    w = (np.arange(1, num_nodes + 1, dtype=np.float64) + offset) ** (-exponent)
    cdf = np.cumsum(w)
    cdf /= cdf[-1]
    return cdf


def generate(cfg: GenConfig) -> Dataset:
    """Emit cfg.num_edges edges with strictly increasing integer timestamps
    (uniformly remapped into [1, horizon]); pure function of the config."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([cfg.seed])))
    n, v = cfg.num_edges, cfg.num_nodes

    repeat = rng.random(n) < cfg.repeat_prob
    repeat[0] = False
    src = _rank_cdf(v, cfg.source_exponent, cfg.offset("source")).searchsorted(rng.random(n)).astype(np.int64)
    dst = _rank_cdf(v, cfg.dst_exponent, cfg.offset("dst")).searchsorted(rng.random(n)).astype(np.int64)
    repeat_pick = rng.random(n)
    burst = rng.random(n) < cfg.burst_prob if cfg.burst_prob > 0 else None

    for i in range(1, n):
        if repeat[i]:
            j = int(repeat_pick[i] * i)
            src[i] = src[j]
            dst[i] = dst[j]

    if burst is not None:
        burst[0] = False
        t_raw = np.cumsum(np.where(burst, 0, 1))  # 1,2,... repeating t on burst steps
    else:
        t_raw = np.arange(1, n + 1, dtype=np.int64)
    t_max = int(t_raw[-1])
    horizon = cfg.effective_horizon
    t = (t_raw * (horizon / t_max)).astype(np.int64) if horizon != t_max else np.asarray(t_raw, dtype=np.int64)

    labels = [str(i) for i in range(v)]
    return Dataset(src, dst, t, labels=labels, name=f"synthetic-seed{cfg.seed}", num_nodes=v)


def calibrate_surprise(
    cfg: GenConfig,
    target: float,
    split_fractions: tuple[float, float, float] = (0.7, 0.15, 0.15),
    tolerance: float = 0.01,
    iterations: int = 20,
) -> GenConfig:
    """Binary-search repeat_prob so the generated dataset's test surprise index
    lands within `tolerance` of `target`.

    The generator seed is held fixed across trials, so surprise is a
    non-increasing step function of repeat_prob and the search is well posed.
    Raises when the target lies outside the achievable range.
    """
    if not 0.0 <= target <= 1.0:
        raise ValueError("target must lie in [0, 1]")

    def measure(p: float) -> float:
        d = generate(dataclasses.replace(cfg, repeat_prob=p))
        return surprise_index(d, chronological_split(d, split_fractions))

    s_max, s_min = measure(0.0), measure(1.0)
    if not (s_min - tolerance <= target <= s_max + tolerance):
        raise ValueError(
            f"target surprise {target} unreachable: this config achieves [{s_min:.4f}, {s_max:.4f}]"
        )
    lo, hi = 0.0, 1.0  # surprise(lo) >= surprise(hi)
    best_p, best_s = (0.0, s_max) if abs(s_max - target) <= abs(s_min - target) else (1.0, s_min)
    for _ in range(iterations):
        mid = (lo + hi) / 2.0
        s = measure(mid)
        if abs(s - target) < abs(best_s - target):
            best_p, best_s = mid, s
        if s > target:
            lo = mid
        else:
            hi = mid
    if abs(best_s - target) > tolerance:
        raise ValueError(
            f"calibration stalled at surprise {best_s:.4f} for target {target} "
            f"(achievable range [{s_min:.4f}, {s_max:.4f}])"
        )
    return dataclasses.replace(cfg, repeat_prob=best_p)
