"""Monte-Carlo comparison of selection strategies and difficulty metrics.

Each trial generates one seeded synthetic run, lets every contender pick a
checkpoint, and charges it the ground-truth generalization it left on the
table (selection regret). Aggregated over seeds this yields a regret /
win-rate table; a win is picking a checkpoint whose true generalization
equals the best one.
"""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass

import numpy as np

from .difficulty import DifficultyMetric, MetricKind
from .engine import rank_checkpoints
from .errors import ConfigError
from .scoring import STRATEGIES, ScoreParams
from .synth import SyntheticRunConfig, selection_regret, simulate_run

logger = logging.getLogger(__name__)

WIN_TOL = 1e-12

METRIC_KINDS = (
    MetricKind.ANLL,
    MetricKind.NLL,
    MetricKind.PRE_ANLL,
    MetricKind.PRE_NLL,
    MetricKind.PRE_CONSISTENCY,
)


@dataclass(frozen=True)
class ComparisonRow:
    name: str
    mean_regret: float
    sd_regret: float
    win_rate: float
    n_runs: int


@dataclass(frozen=True)
class ComparisonReport:
    """Per-contender regret statistics over a set of seeded runs."""

    axis: str  # "strategies" or "metrics"
    rows: tuple[ComparisonRow, ...]
    regrets: dict[str, tuple[float, ...]]  # full per-seed trails, paired by index

    def regret_of(self, name: str) -> np.ndarray:
        return np.asarray(self.regrets[name])


def _summarize(axis: str, regrets: dict[str, list[float]]) -> ComparisonReport:
    rows = []
    for name, values in regrets.items():
        arr = np.asarray(values)
        rows.append(ComparisonRow(
            name=name,
            mean_regret=float(arr.mean()),
            sd_regret=float(arr.std(ddof=1)) if len(arr) > 1 else 0.0,
            win_rate=float(np.mean(arr <= WIN_TOL)),
            n_runs=len(arr),
        ))
    return ComparisonReport(
        axis=axis,
        rows=tuple(rows),
        regrets={k: tuple(v) for k, v in regrets.items()},
    )


def compare_strategies(
    base_config: SyntheticRunConfig,
    n_runs: int = 100,
    params: ScoreParams = ScoreParams(),
    strategies: tuple[str, ...] = STRATEGIES,
) -> ComparisonReport:
    """Run every strategy over n_runs seeded synthetic runs.

    Seeds are base_config.seed + run index, so reports are reproducible
    and regret trails are paired across strategies.
    """
    unknown = set(strategies) - set(STRATEGIES)
    if unknown:
        raise ConfigError(f"unknown strategies: {sorted(unknown)}")
    if n_runs < 1:
        raise ConfigError("n_runs must be >= 1")
    regrets: dict[str, list[float]] = {s: [] for s in strategies}
    for i in range(n_runs):
        config = dataclasses.replace(base_config, seed=base_config.seed + i)
        run = simulate_run(config)
        aggregates = run.aggregates()
        val = run.val_aggregates() if "val_reward" in strategies else None
        for strategy in strategies:
            report = rank_checkpoints(
                aggregates, run.manifest, strategy, params,
                val_samples=val if strategy == "val_reward" else None,
            )
            regrets[strategy].append(selection_regret(run.truth, report.winner))
    return _summarize("strategies", regrets)


def compare_metrics(
    base_config: SyntheticRunConfig,
    n_runs: int = 100,
    params: ScoreParams = ScoreParams(),
    kinds: tuple[MetricKind, ...] = METRIC_KINDS,
) -> ComparisonReport:
    """Ablate the difficulty metric under the hardest-sample strategy.

    The on-the-fly metrics read the logs; the precomputed ones use the
    run's simulated before-training score tables.
    """
    if n_runs < 1:
        raise ConfigError("n_runs must be >= 1")
    regrets: dict[str, list[float]] = {k.value: [] for k in kinds}
    for i in range(n_runs):
        config = dataclasses.replace(base_config, seed=base_config.seed + i)
        run = simulate_run(config)
        for kind in kinds:
            metric = (DifficultyMetric(kind) if kind.is_on_the_fly
                      else run.pre_metric(kind))
            aggregates = run.aggregates(metric)
            report = rank_checkpoints(aggregates, run.manifest, "ugcs", params)
            regrets[kind.value].append(selection_regret(run.truth, report.winner))
    return _summarize("metrics", regrets)
