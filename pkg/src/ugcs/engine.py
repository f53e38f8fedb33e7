"""Checkpoint ranking, hyperparameter sweeps, and streaming best-so-far mode.

Offline, `rank_checkpoints` scores every checkpoint in a manifest and picks
the argmax (ties go to the earliest step: it is the cheapest checkpoint to
have produced). `StreamState` consumes the same logs step by step with a
rolling buffer of the last delta steps and reproduces the offline winner
exactly, emitting a BestChanged event whenever the running best improves.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .difficulty import DifficultyMetric, per_answer_value
from .errors import (
    ConfigError,
    EmptyWindowError,
    MissingCalibrationError,
    MissingValidationError,
    NoScorableCheckpointError,
    OutOfOrderStepError,
    DuplicateKeyError,
)
from .records import AggregatedSample, AnswerRecord, Key, RunManifest
from .scoring import (
    STRATEGIES,
    CheckpointScore,
    ScoreParams,
    score_checkpoint,
)

logger = logging.getLogger(__name__)

DEFAULT_P_GRID: tuple[int, ...] = tuple(range(1, 21))
DEFAULT_DELTA_GRID: tuple[int, ...] = (10, 20, 50, 100)

# Starting points when no calibration set is available: small p sharpens
# discrimination for weak models, moderate p keeps estimates stable for
# strong ones.
P_RECOMMENDATION_HINT = {"weak_model": 3, "strong_model": 10}


def _as_sample_list(samples) -> list[AggregatedSample]:
    if isinstance(samples, Mapping):
        samples = samples.values()
    out = list(samples)
    out.sort(key=lambda s: s.key)
    return out


@dataclass(frozen=True)
class RankingReport:
    """Per-checkpoint scores for one strategy plus the argmax winner."""

    strategy: str
    scores: tuple[CheckpointScore, ...]
    winner: int
    winner_value: float
    tie_policy_applied: bool
    skipped: tuple[int, ...] = ()


def rank_checkpoints(
    samples,
    manifest: RunManifest,
    strategy: str = "ugcs",
    params: ScoreParams = ScoreParams(),
    *,
    val_samples: Iterable[AggregatedSample] | None = None,
    metric_values: Mapping[Key, float] | None = None,
) -> RankingReport:
    """Score every manifest checkpoint and select the highest scorer.

    Checkpoints with empty windows (or, for val_reward, no validation
    records) are skipped with a warning. Exact score ties resolve to the
    earliest checkpoint step.
    """
    sample_list = _as_sample_list(samples)
    val_list = None if val_samples is None else _as_sample_list(val_samples)
    scores: list[CheckpointScore] = []
    skipped: list[int] = []
    for step in manifest.checkpoint_steps:
        try:
            scores.append(
                score_checkpoint(
                    strategy, step,
                    samples=sample_list, manifest=manifest, params=params,
                    val_samples=val_list, metric_values=metric_values,
                )
            )
        except (EmptyWindowError, MissingValidationError) as exc:
            logger.warning("skipping checkpoint %d: %s", step, exc)
            skipped.append(step)
    if not scores:
        raise NoScorableCheckpointError(
            f"no checkpoint in {list(manifest.checkpoint_steps)} was scorable"
        )
    best = max(scores, key=lambda s: s.value)  # max() keeps the earliest on ties
    ties = sum(1 for s in scores if s.value == best.value)
    return RankingReport(
        strategy=strategy,
        scores=tuple(scores),
        winner=best.checkpoint_step,
        winner_value=best.value,
        tie_policy_applied=ties > 1,
        skipped=tuple(skipped),
    )


@dataclass(frozen=True)
class PSweepRow:
    p: float
    winner: int
    winner_value: float
    calibration: float


@dataclass(frozen=True)
class DeltaSweepRow:
    delta: int
    winner: int
    winner_value: float


@dataclass(frozen=True)
class SweepReport:
    """Result of varying one scoring parameter over a grid."""

    axis: str  # "p" or "delta"
    grid: tuple[float, ...]
    rows: tuple
    recommended_p: float | None = None
    winners_agree: bool | None = None


def _check_grid(grid: Sequence[float], name: str) -> tuple:
    values = tuple(grid)
    if not values:
        raise ConfigError(f"{name} grid must be non-empty")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ConfigError(f"{name} grid must be strictly ascending")
    return values


def sweep_p(
    samples,
    manifest: RunManifest,
    p_grid: Sequence[float] = DEFAULT_P_GRID,
    calibration_scores: Mapping[int, float] | None = None,
    params: ScoreParams = ScoreParams(),
    *,
    metric_values: Mapping[Key, float] | None = None,
) -> SweepReport:
    """Rank with the hardest-sample strategy at each p and recommend the p
    whose winning checkpoint has the best calibration score.

    ``calibration_scores`` maps checkpoint_step to an external quality
    number (benchmark accuracy, held-out reward, ...). Exact calibration
    ties resolve to the smallest p.
    """
    grid = _check_grid(p_grid, "p")
    if any(not 0.0 < p <= 100.0 for p in grid):
        raise ConfigError("every p in the grid must be in (0, 100]")
    if calibration_scores is None:
        raise MissingCalibrationError("sweep_p requires a calibration score table")
    sample_list = _as_sample_list(samples)
    rows: list[PSweepRow] = []
    best_p: float | None = None
    best_cal = -math.inf
    for p in grid:
        report = rank_checkpoints(
            sample_list, manifest, "ugcs",
            ScoreParams(p=p, delta=params.delta), metric_values=metric_values,
        )
        if report.winner not in calibration_scores:
            raise MissingCalibrationError(
                f"no calibration score for checkpoint {report.winner}"
            )
        cal = calibration_scores[report.winner]
        rows.append(PSweepRow(p=p, winner=report.winner,
                              winner_value=report.winner_value, calibration=cal))
        if cal > best_cal:  # strictly greater: ties keep the smaller p
            best_cal = cal
            best_p = p
    return SweepReport(axis="p", grid=grid, rows=tuple(rows), recommended_p=best_p)


def sweep_delta(
    samples,
    manifest: RunManifest,
    delta_grid: Sequence[int] = DEFAULT_DELTA_GRID,
    strategy: str = "ugcs",
    params: ScoreParams = ScoreParams(),
    *,
    val_samples: Iterable[AggregatedSample] | None = None,
    metric_values: Mapping[Key, float] | None = None,
) -> SweepReport:
    """Rank once per window size and report whether the winners agree."""
    grid = _check_grid(delta_grid, "delta")
    if any(int(d) != d or d < 1 for d in grid):
        raise ConfigError("every delta in the grid must be a positive integer")
    sample_list = _as_sample_list(samples)
    rows: list[DeltaSweepRow] = []
    for delta in grid:
        report = rank_checkpoints(
            sample_list, manifest, strategy,
            ScoreParams(p=params.p, delta=int(delta)),
            val_samples=val_samples, metric_values=metric_values,
        )
        rows.append(DeltaSweepRow(delta=int(delta), winner=report.winner,
                                  winner_value=report.winner_value))
    agree = len({row.winner for row in rows}) == 1
    return SweepReport(axis="delta", grid=grid, rows=tuple(rows), winners_agree=agree)


@dataclass(frozen=True)
class BestChanged:
    """Emitted when a newly scored checkpoint beats the running best."""

    step: int
    value: float

    def to_json_obj(self) -> dict:
        return {"event": "best_changed", "step": self.step, "value": self.value}


class StreamState:
    """Rolling-window scorer for logs that arrive step by step.

    Records must arrive in nondecreasing step order, one step per update
    call (several calls may share a step). The buffer holds exactly the
    samples of the last delta steps; each manifest checkpoint is scored the
    moment the stream passes it, from exactly the same window the offline
    ranker would use.

    Single writer: only one thread may call update/finalize. ``best`` is
    rebound atomically, so readers may snapshot it at any time.
    """

    def __init__(
        self,
        manifest: RunManifest,
        strategy: str = "ugcs",
        params: ScoreParams = ScoreParams(),
        metric: DifficultyMetric | None = None,
        val_samples: Iterable[AggregatedSample] | None = None,
    ):
        if strategy not in STRATEGIES:
            raise ConfigError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")
        self.manifest = manifest
        self.strategy = strategy
        self.params = params
        self.metric = metric if metric is not None else DifficultyMetric.anll_metric()
        self.val_samples = None if val_samples is None else _as_sample_list(val_samples)
        self.last_step = 0
        self.best: tuple[int, float] | None = None
        self.scores: list[CheckpointScore] = []
        self.skipped: list[int] = []
        # step -> key -> list of (answer_index, reward, per-answer difficulty)
        self._buffer: dict[int, dict[Key, list[tuple[int, float, float | None]]]] = {}
        self._seen: dict[int, set[tuple[int, str, int]]] = {}
        self._done: set[int] = set()

    # -- buffer maintenance ------------------------------------------------

    def buffered_steps(self) -> list[int]:
        return sorted(self._buffer)

    def buffered_keys(self) -> list[Key]:
        return sorted(k for group in self._buffer.values() for k in group)

    def _evict(self, latest: int) -> None:
        horizon = latest - self.params.delta + 1
        for step in [s for s in self._buffer if s < horizon]:
            del self._buffer[step]
            self._seen.pop(step, None)

    def _window_samples(self, checkpoint_step: int) -> list[AggregatedSample]:
        lo = max(1, checkpoint_step - self.params.delta)
        out: list[AggregatedSample] = []
        for step in sorted(self._buffer):
            if not lo <= step < checkpoint_step:
                continue
            for key in sorted(self._buffer[step]):
                answers = sorted(self._buffer[step][key])
                n = len(answers)
                mean_reward = math.fsum(a[1] for a in answers) / n
                if self.metric.is_on_the_fly:
                    value = math.fsum(a[2] for a in answers) / n  # type: ignore[misc]
                else:
                    value = self.metric.lookup(key[1])
                out.append(AggregatedSample(key=key, mean_reward=mean_reward,
                                            mean_anll=value, n_answers=n))
        return out

    # -- scoring -----------------------------------------------------------

    def _score(self, checkpoint_step: int) -> BestChanged | None:
        self._done.add(checkpoint_step)
        try:
            score = score_checkpoint(
                self.strategy, checkpoint_step,
                samples=self._window_samples(checkpoint_step),
                manifest=self.manifest, params=self.params,
                val_samples=self.val_samples,
            )
        except (EmptyWindowError, MissingValidationError) as exc:
            logger.warning("skipping checkpoint %d: %s", checkpoint_step, exc)
            self.skipped.append(checkpoint_step)
            return None
        self.scores.append(score)
        if self.best is None or score.value > self.best[1]:
            self.best = (checkpoint_step, score.value)
            return BestChanged(step=checkpoint_step, value=score.value)
        return None

    def _score_through(self, step: int) -> list[BestChanged]:
        events = []
        for c in self.manifest.checkpoint_steps:
            if c > step:
                break
            if c not in self._done:
                event = self._score(c)
                if event is not None:
                    events.append(event)
        return events

    # -- public API ----------------------------------------------------------

    def update(self, records: Sequence[AnswerRecord]) -> list[BestChanged]:
        """Ingest one step's records; returns any BestChanged events.

        Scoring happens before ingestion, so a checkpoint at step c sees
        exactly the strict-past window [c - delta, c).
        """
        records = list(records)
        if not records:
            return []
        steps = {r.step for r in records}
        if len(steps) > 1:
            raise ConfigError(f"one update call takes one step, got {sorted(steps)}")
        step = steps.pop()
        if step < self.last_step:
            raise OutOfOrderStepError(
                f"step {step} arrived after step {self.last_step}"
            )
        events: list[BestChanged] = []
        if step > self.last_step:
            events = self._score_through(step)
            self._evict(step)
            self.last_step = step
        seen = self._seen.setdefault(step, set())
        group = self._buffer.setdefault(step, {})
        for record in records:
            full_key = (record.step, record.sample_id, record.answer_index)
            if full_key in seen:
                raise DuplicateKeyError(f"duplicate record {full_key}")
            seen.add(full_key)
            value = None
            if self.metric.is_on_the_fly:
                value = per_answer_value(record, self.metric.kind)
            group.setdefault(record.key, []).append(
                (record.answer_index, record.reward, value)
            )
        return events

    def finalize(self) -> list[BestChanged]:
        """Score the checkpoints the stream never reached (end of log)."""
        events = []
        for c in self.manifest.checkpoint_steps:
            if c not in self._done:
                event = self._score(c)
                if event is not None:
                    events.append(event)
        return events


def stream_update(state: StreamState, records: Sequence[AnswerRecord]) -> list[BestChanged]:
    """Functional wrapper over StreamState.update."""
    return state.update(records)


def stream_finalize(state: StreamState) -> list[BestChanged]:
    """Functional wrapper over StreamState.finalize."""
    return state.finalize()


def replay_stream(
    records: Iterable[AnswerRecord],
    manifest: RunManifest,
    strategy: str = "ugcs",
    params: ScoreParams = ScoreParams(),
    *,
    metric: DifficultyMetric | None = None,
    val_samples: Iterable[AggregatedSample] | None = None,
) -> tuple[StreamState, list[BestChanged]]:
    """Feed an already-recorded log through stream mode, step by step."""
    state = StreamState(manifest, strategy, params, metric=metric, val_samples=val_samples)
    events: list[BestChanged] = []
    batch: list[AnswerRecord] = []
    for record in records:
        if batch and record.step != batch[0].step:
            events.extend(state.update(batch))
            batch = []
        batch.append(record)
    if batch:
        events.extend(state.update(batch))
    events.extend(state.finalize())
    return state, events
