"""Replicated Monte Carlo checks of the deviation bound, the tail moment
inequality and the main/tail rate ordering.

Replicate ``j`` at sample size ``n`` draws its path from the stream keyed by
``(master_seed, n, j)``. Replicates are merged in index order, so a report
does not depend on how many workers computed it.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .bounds import (
    MomentSpec,
    RateConstants,
    deviation_threshold,
    rate_constants,
    theorem1_bound,
    theorem1_bound_raw,
    truncation_level,
)
from .generators import (
    GeneratorDescriptor,
    path_abs_moment,
    path_mean,
    path_truncated_moments,
    sample_path,
)

RATE_TABLE_HEADER = "n,exceedance,bound,main_norm,tail_norm"


@dataclass(frozen=True)
class ExperimentConfig:
    generator: GeneratorDescriptor
    moments: MomentSpec
    delta: float
    c: Optional[float]  # None means c = c0
    n_grid: tuple
    replicates: int
    master_seed: int = 0
    _constants: Optional[RateConstants] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        grid = tuple(int(n) for n in self.n_grid)
        if not grid:
            raise ValueError("n_grid must be nonempty")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("n_grid must be strictly increasing")
        if grid[0] < 2:
            raise ValueError("n_grid values must be >= 2")
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must be a 64-bit unsigned integer")
        self.generator.base.require_moment(self.moments.alpha)
        object.__setattr__(self, "n_grid", grid)
        object.__setattr__(
            self,
            "_constants",
            rate_constants(self.generator.declared_decay, self.moments, self.delta, self.c),
        )

    @property
    def constants(self) -> RateConstants:
        return self._constants

    def to_json(self) -> dict:
        return {
            "generator": self.generator.to_json(),
            "moments": {
                "alpha": self.moments.alpha,
                "alpha_prime": self.moments.alpha_prime,
                "nu_alpha": self.moments.nu_alpha,
            },
            "delta": self.delta,
            "c": "c0" if self.c is None else self.c,
            "n_grid": list(self.n_grid),
            "replicates": self.replicates,
            "master_seed": self.master_seed,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "ExperimentConfig":
        gen = GeneratorDescriptor.from_json(doc["generator"])
        m = doc["moments"]
        alpha = float(m["alpha"])
        alpha_prime = float(m.get("alpha_prime", alpha))
        nu = m.get("nu_alpha", "auto")
        if nu == "auto":
            gen.base.require_moment(alpha)
            nu = path_abs_moment(gen, 1 + alpha)
        c = doc.get("c", "c0")
        return cls(
            generator=gen,
            moments=MomentSpec(alpha, alpha_prime, float(nu)),
            delta=float(doc["delta"]),
            c=None if c == "c0" else float(c),
            n_grid=tuple(doc["n_grid"]),
            replicates=int(doc["replicates"]),
            master_seed=int(doc.get("master_seed", 0)),
        )


def load_config(path) -> ExperimentConfig:
    """Load a config from ``path``, or from the bundled configs by file name."""
    p = Path(path)
    if p.exists():
        text = p.read_text()
    else:
        bundled = resources.files("heavytail") / "configs" / p.name
        if not bundled.is_file():
            raise FileNotFoundError(f"no such config: {path}")
        text = bundled.read_text()
    return ExperimentConfig.from_json(json.loads(text))


def shipped_configs() -> list[str]:
    folder = resources.files("heavytail") / "configs"
    return sorted(p.name for p in folder.iterdir() if p.name.endswith(".json"))


@dataclass(frozen=True)
class ReplicateStats:
    error: float      # sample mean minus E[X]
    main_avg: float   # average of centered parts with |x| <= b
    tail_avg: float   # average of centered parts with |x| > b
    tail_sum: float   # n * tail_avg, summed directly


def _replicate_stats(x, b, mean_in, mean_out, mu) -> ReplicateStats:
    n = x.size
    total, s_in, s_out = kernels.split_sums(x, b)
    return ReplicateStats(
        error=total / n - mu,
        main_avg=s_in / n - mean_in,
        tail_avg=s_out / n - mean_out,
        tail_sum=s_out - n * mean_out,
    )


def _run_chunk(cfg: ExperimentConfig, n: int, indices: Sequence[int]) -> list[ReplicateStats]:
    b = truncation_level(n, cfg.constants)
    mean_in, mean_out, _ = path_truncated_moments(cfg.generator, b)
    mu = path_mean(cfg.generator)
    out = []
    for j in indices:
        x = sample_path(cfg.generator, n, kernels.replicate_stream(n, j), seed=cfg.master_seed)
        out.append(_replicate_stats(x, b, mean_in, mean_out, mu))
    return out


def _chunks(R, jobs):
    size = max(1, math.ceil(R / (4 * jobs)))
    return [range(i, min(i + size, R)) for i in range(0, R, size)]


def run_replicates(cfg: ExperimentConfig, n: int, jobs: int = 1, pool=None) -> list[ReplicateStats]:
    """All ``cfg.replicates`` replicate statistics at sample size ``n``, index-ordered."""
    R = cfg.replicates
    if pool is None and jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as own:
            return run_replicates(cfg, n, jobs, own)
    if pool is None:
        return _run_chunk(cfg, n, range(R))
    parts = pool.map(_run_chunk, *zip(*[(cfg, n, c) for c in _chunks(R, jobs)]))
    return [s for part in parts for s in part]


def _lq_norm(values, q):
    return (math.fsum(abs(v) ** q for v in values) / len(values)) ** (1 / q)


def fit_rate(ns, norms) -> tuple[float, float, float]:
    """OLS of ``log(norm)`` on ``log(n)``: ``(slope, intercept, r2)``."""
    ns = np.asarray(ns, dtype=np.float64)
    norms = np.asarray(norms, dtype=np.float64)
    if ns.size < 3 or ns.size != norms.size:
        raise ValueError("need at least 3 (n, norm) pairs")
    if np.any(~(norms > 0)):
        raise ValueError("norms must be positive")
    x, y = np.log(ns), np.log(norms)
    xc, yc = x - x.mean(), y - y.mean()
    slope = float(np.dot(xc, yc) / np.dot(xc, xc))
    intercept = float(y.mean() - slope * x.mean())
    ss_tot = float(np.dot(yc, yc))
    resid = yc - slope * xc
    ss_res = float(np.dot(resid, resid))
    r2 = 1.0 if ss_tot <= 1e-30 else max(0.0, min(1.0, 1 - ss_res / ss_tot))
    return slope, intercept, r2


@dataclass(frozen=True)
class RateRow:
    n: int
    exceedance: float
    bound: float
    bound_raw: float
    threshold: float
    truncation: float
    main_norm: float
    tail_norm: float
    below_n0: bool


@dataclass(frozen=True)
class ExperimentReport:
    config: ExperimentConfig
    constants: RateConstants
    rows: tuple
    fitted_main_slope: Optional[float]
    fitted_tail_slope: Optional[float]

    def row(self, n: int) -> RateRow:
        return next(r for r in self.rows if r.n == n)

    def to_json(self) -> dict:
        return {
            "config": self.config.to_json(),
            "constants": self.constants.report(),
            "rows": [
                {
                    "n": r.n,
                    "exceedance_freq": r.exceedance,
                    "bound": r.bound,
                    "bound_raw": r.bound_raw,
                    "threshold": r.threshold,
                    "truncation_level": r.truncation,
                    "main_norm": r.main_norm,
                    "tail_norm": r.tail_norm,
                    "below_n0": r.below_n0,
                }
                for r in self.rows
            ],
            "fitted_main_slope": self.fitted_main_slope,
            "fitted_tail_slope": self.fitted_tail_slope,
        }

    def rate_table(self) -> str:
        lines = [RATE_TABLE_HEADER]
        for r in self.rows:
            lines.append(
                ",".join(
                    [str(r.n)]
                    + [format(v, ".17g") for v in (r.exceedance, r.bound, r.main_norm, r.tail_norm)]
                )
            )
        return "\n".join(lines) + "\n"


def run_deviation_experiment(cfg: ExperimentConfig, jobs: int = 1) -> ExperimentReport:
    k = cfg.constants
    q = 1 + cfg.moments.alpha
    rows = []
    pool = ProcessPoolExecutor(max_workers=jobs) if jobs > 1 else None
    try:
        for n in cfg.n_grid:
            stats = run_replicates(cfg, n, jobs, pool)
            thr = deviation_threshold(n, k)
            hits = sum(1 for s in stats if abs(s.error) >= thr)
            rows.append(
                RateRow(
                    n=n,
                    exceedance=hits / len(stats),
                    bound=theorem1_bound(n, k),
                    bound_raw=theorem1_bound_raw(n, k),
                    threshold=thr,
                    truncation=truncation_level(n, k),
                    main_norm=_lq_norm([s.main_avg for s in stats], q),
                    tail_norm=_lq_norm([s.tail_avg for s in stats], q),
                    below_n0=k.n0 is None or n < k.n0,
                )
            )
    finally:
        if pool is not None:
            pool.shutdown()
    main_slope = tail_slope = None
    ns = [r.n for r in rows]
    if len(rows) >= 3:
        if all(r.main_norm > 0 for r in rows):
            main_slope = fit_rate(ns, [r.main_norm for r in rows])[0]
        if all(r.tail_norm > 0 for r in rows):
            tail_slope = fit_rate(ns, [r.tail_norm for r in rows])[0]
    return ExperimentReport(cfg, k, tuple(rows), main_slope, tail_slope)


@dataclass(frozen=True)
class Lemma1Result:
    empirical_moment: float
    bound: float
    passed: bool


def tail_moment_bound(n: int, k: RateConstants) -> float:
    """``2**(1+alpha) * c_alpha * nu_alpha * n``."""
    return 2 ** (1 + k.alpha) * k.c_alpha * k.nu_alpha * n


def lemma1_check(cfg: ExperimentConfig, n: int, jobs: int = 1) -> Lemma1Result:
    """Replicate average of ``|sum_k Z_k(b_n)|**(1+alpha)`` against its bound."""
    q = 1 + cfg.moments.alpha
    stats = run_replicates(cfg, n, jobs)
    emp = math.fsum(abs(s.tail_sum) ** q for s in stats) / len(stats)
    bound = tail_moment_bound(n, cfg.constants)
    return Lemma1Result(emp, bound, emp <= bound)
