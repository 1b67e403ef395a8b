"""Reproducible block-parallel outage estimation and parameter sweeps.

Trials are cut into fixed-size blocks. Block ``b`` draws its channels from
the substream ``(seed, series, point, tag, b)``, so results depend only on
``(seed, trials)`` and never on the worker count or execution order. Counts
are integers and are summed exactly.
"""
from __future__ import annotations

import math
import os
from collections.abc import Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Union

import numpy as np

from . import analytic
from .channel import make_stream, sample_batch
from .model import InvalidParameterError, OutageCause, SystemConfig
from .selection import BatchKernel, Strategy, check_compatible, outage_codes

BLOCK_SIZE = 1 << 15
WORKERS_ENV = "CRNOMA_WORKERS"
CRN_TAG = 0
CUSTOM_TAG = 1000

StrategyLike = Union[Strategy, str, BatchKernel]


def default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise InvalidParameterError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    if n < 1:
        raise InvalidParameterError(f"{WORKERS_ENV} must be >= 1")
    return n


def binomial_std_err(outages: int, trials: int) -> float:
    """Plug-in binomial standard error; 3/n when the count is 0 or n."""
    if outages == 0 or outages == trials:
        return 3.0 / trials
    p = outages / trials
    return math.sqrt(p * (1.0 - p) / trials)


@dataclass(frozen=True)
class OutageEstimate:
    strategy: str
    p_hat: float
    trials: int
    outages: int
    std_err: float
    seed: int
    cause_histogram: dict = field(default_factory=dict)

    @classmethod
    def from_counts(cls, strategy: str, counts: np.ndarray, trials: int, seed: int) -> "OutageEstimate":
        hist = {c.name: int(counts[c]) for c in OutageCause if c is not OutageCause.NONE}
        outages = sum(hist.values())
        return cls(strategy, outages / trials, trials, outages,
                   binomial_std_err(outages, trials), seed, hist)


def _label(strategy: StrategyLike) -> str:
    if isinstance(strategy, Strategy):
        return strategy.value
    if isinstance(strategy, str):
        return Strategy(strategy).value
    return getattr(strategy, "__name__", "custom")


def _normalise(strategy: StrategyLike):
    if isinstance(strategy, str) and not isinstance(strategy, Strategy):
        return Strategy(strategy)
    return strategy


def _block_task(task):
    cfg, strategies, seed, key, block, n = task
    batch = sample_batch(cfg, make_stream(seed, *key, block), n)
    th = cfg.thresholds()
    codes = [outage_codes(s, batch, cfg, th) for s in strategies]
    counts = np.stack([np.bincount(c, minlength=len(OutageCause)) for c in codes]).astype(np.int64)
    out = np.stack([c != OutageCause.NONE for c in codes])
    exclusive = np.einsum("in,jn->ij", out.astype(np.int64), (~out).astype(np.int64))
    return counts, exclusive


def _run_blocks(cfg, strategies, trials, seed, key, workers):
    if trials < 1:
        raise InvalidParameterError("trials must be >= 1")
    for s in strategies:
        check_compatible(s, cfg)
    n_blocks = -(-trials // BLOCK_SIZE)
    tasks = [(cfg, strategies, seed, key, b, min(BLOCK_SIZE, trials - b * BLOCK_SIZE))
             for b in range(n_blocks)]
    workers = default_workers() if workers is None else workers
    if workers > 1 and n_blocks > 1:
        with ProcessPoolExecutor(max_workers=min(workers, n_blocks)) as pool:
            results = list(pool.map(_block_task, tasks))
    else:
        results = [_block_task(t) for t in tasks]
    counts = sum(r[0] for r in results)
    exclusive = sum(r[1] for r in results)
    return counts, exclusive


def _tag(strategy) -> int:
    return strategy.code + 1 if isinstance(strategy, Strategy) else CUSTOM_TAG


def estimate(strategy: StrategyLike, cfg: SystemConfig, trials: int, seed: int, *,
             workers: Optional[int] = None, series: int = 0, point: int = 0) -> OutageEstimate:
    """Monte Carlo outage probability of one strategy on its own random stream."""
    strategy = _normalise(strategy)
    counts, _ = _run_blocks(cfg, [strategy], trials, seed, (series, point, _tag(strategy)), workers)
    return OutageEstimate.from_counts(_label(strategy), counts[0], trials, seed)


@dataclass(frozen=True)
class PairedEstimate:
    """Estimates sharing one realization per trial (common random numbers).

    ``exclusive[(a, b)]`` counts trials in which ``a`` is in outage and ``b``
    is not.
    """

    estimates: dict
    exclusive: dict

    def __getitem__(self, label: str) -> OutageEstimate:
        return self.estimates[label]


def estimate_paired(strategies: Sequence[StrategyLike], cfg: SystemConfig, trials: int, seed: int, *,
                    workers: Optional[int] = None, series: int = 0, point: int = 0) -> PairedEstimate:
    strategies = [_normalise(s) for s in strategies]
    counts, exclusive = _run_blocks(cfg, strategies, trials, seed, (series, point, CRN_TAG), workers)
    labels = [_label(s) for s in strategies]
    estimates = {lab: OutageEstimate.from_counts(lab, counts[i], trials, seed)
                 for i, lab in enumerate(labels)}
    excl = {(a, b): int(exclusive[i, j]) for i, a in enumerate(labels)
            for j, b in enumerate(labels) if i != j}
    return PairedEstimate(estimates, excl)


def analytic_value(strategy: StrategyLike, cfg: SystemConfig) -> Optional[float]:
    """Closed-form outage where one exists (perfect CSI only), else ``None``."""
    if not cfg.perfect_csi or cfg.K * cfg.M > analytic.MAX_KM:
        return None
    strategy = _normalise(strategy)
    if strategy is Strategy.ALG1:
        return analytic.outage_alg1_closed(cfg)
    if strategy is Strategy.MIN_GAIN_QOS and cfg.K == 1:
        return analytic.outage_single_antenna_closed(cfg)
    return None


SWEEP_VARIABLES = ("snr_db", "omega0", "sigma_e_sq", "M", "K")


def config_at(cfg: SystemConfig, variable: str, value) -> SystemConfig:
    if variable not in SWEEP_VARIABLES:
        raise InvalidParameterError(f"cannot sweep {variable!r}; choose from {SWEEP_VARIABLES}")
    if variable in ("M", "K"):
        if float(value) != int(value):
            raise InvalidParameterError(f"{variable} grid values must be integers, got {value!r}")
        value = int(value)
    else:
        value = float(value)
    return replace(cfg, **{variable: value})


@dataclass(frozen=True)
class SweepResult:
    variable: str
    grid: tuple
    estimates: dict            # label -> list[OutageEstimate]
    analytic: dict             # label -> list[Optional[float]]

    @property
    def strategies(self) -> tuple:
        return tuple(self.estimates)

    def curve(self, label: str) -> np.ndarray:
        return np.array([e.p_hat for e in self.estimates[label]])

    def std_errs(self, label: str) -> np.ndarray:
        return np.array([e.std_err for e in self.estimates[label]])


def sweep(strategies: Sequence[StrategyLike], cfg: SystemConfig, variable: str, grid: Sequence,
          trials: int, seed: int, *, common_random_numbers: bool = False,
          include_analytic: bool = True, workers: Optional[int] = None, series: int = 0) -> SweepResult:
    """One estimate per (strategy, grid point); independent streams per point."""
    grid = tuple(grid)
    if not grid:
        raise InvalidParameterError("sweep grid is empty")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise InvalidParameterError("sweep grid must be strictly increasing")
    strategies = [_normalise(s) for s in strategies]
    labels = [_label(s) for s in strategies]
    configs = [config_at(cfg, variable, v) for v in grid]
    for c in configs:
        for s in strategies:
            check_compatible(s, c)

    estimates = {lab: [] for lab in labels}
    values = {lab: [] for lab in labels}
    for i, c in enumerate(configs):
        if common_random_numbers:
            paired = estimate_paired(strategies, c, trials, seed, workers=workers, series=series, point=i)
            for lab in labels:
                estimates[lab].append(paired[lab])
        else:
            for s, lab in zip(strategies, labels):
                estimates[lab].append(estimate(s, c, trials, seed, workers=workers, series=series, point=i))
        for s, lab in zip(strategies, labels):
            values[lab].append(analytic_value(s, c) if include_analytic else None)
    return SweepResult(variable, grid, estimates, values)
