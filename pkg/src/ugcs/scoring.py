"""Training windows and per-checkpoint scoring strategies.

A checkpoint saved at step c is scored from the window of aggregated
samples with step in [c - delta, c), clamped at step 1 for early
checkpoints. Five strategies are registered:

* ``ugcs``            mean reward over the top-p% hardest window samples
* ``train_reward``    mean reward over the whole window
* ``top_reward``      mean reward over the top-p% highest-reward samples
* ``val_reward``      mean per-sample reward on a held-out validation log
* ``last_checkpoint`` degenerate rule that always picks the final checkpoint

Every reward mean is an fsum over the selected samples in canonical
(step, sample_id) order, so scores are bit-reproducible and ugcs at p=100
equals train_reward exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .errors import ConfigError, EmptyWindowError, MissingValidationError
from .records import AggregatedSample, Key, RunManifest

STRATEGIES = ("ugcs", "train_reward", "val_reward", "last_checkpoint", "top_reward")


@dataclass(frozen=True)
class Window:
    """All aggregated samples in the half-open interval [c - delta, c)."""

    checkpoint_step: int
    delta: int
    samples: tuple[AggregatedSample, ...]

    def __len__(self) -> int:
        return len(self.samples)

    def keys(self) -> list[Key]:
        return [s.key for s in self.samples]


@dataclass(frozen=True)
class CheckpointScore:
    """One strategy's score for one checkpoint, with selection provenance.

    ``selected_keys`` lists the window samples whose rewards entered the
    mean, in selection order; it is empty for the strategies that do not
    select from the window (val_reward, last_checkpoint).
    """

    checkpoint_step: int
    strategy: str
    value: float
    selected_keys: tuple[Key, ...] = ()

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ConfigError(
                f"non-finite score {self.value!r} for checkpoint {self.checkpoint_step}"
            )


@dataclass(frozen=True)
class ScoreParams:
    """Knobs shared by the window strategies."""

    p: float = 10.0
    delta: int = 100

    def __post_init__(self):
        if not 0.0 < self.p <= 100.0:
            raise ConfigError(f"p must be in (0, 100], got {self.p}")
        if self.delta < 1:
            raise ConfigError(f"delta must be >= 1, got {self.delta}")


def extract_window(samples: Iterable[AggregatedSample], checkpoint_step: int,
                   delta: int) -> Window:
    """Collect the samples with step in [max(1, c - delta), c).

    The lower bound clamps at the first step so the earliest checkpoint is
    still scorable. Raises EmptyWindowError when nothing falls in range.
    """
    if checkpoint_step < 1:
        raise ConfigError(f"checkpoint_step must be >= 1, got {checkpoint_step}")
    if delta < 1:
        raise ConfigError(f"delta must be >= 1, got {delta}")
    lo = max(1, checkpoint_step - delta)
    member = [s for s in samples if lo <= s.step < checkpoint_step]
    if not member:
        raise EmptyWindowError(
            f"no samples in [{lo}, {checkpoint_step}) for checkpoint {checkpoint_step}"
        )
    member.sort(key=lambda s: s.key)
    return Window(checkpoint_step=checkpoint_step, delta=delta, samples=tuple(member))


def subset_size(p: float, window_size: int) -> int:
    """Top-p% subset size: ceil(p% of the window), never smaller than 1."""
    if not 0.0 < p <= 100.0:
        raise ConfigError(f"p must be in (0, 100], got {p}")
    return max(1, math.ceil(p * window_size / 100.0))


def select_top_hard(window: Window, p: float,
                    metric_values: Mapping[Key, float] | None = None) -> list[Key]:
    """The k hardest window keys, ordered by (difficulty desc, step, sample_id).

    Difficulty defaults to each sample's aggregated mean_anll; an explicit
    ``metric_values`` map overrides it. The secondary sort keys make the
    selection deterministic under ties.
    """
    if metric_values is None:
        ranked = sorted(window.samples, key=lambda s: (-s.mean_anll, s.key))
        keys = [s.key for s in ranked]
    else:
        keys = sorted(window.keys(), key=lambda k: (-metric_values[k], k))
    return keys[: subset_size(p, len(window))]


def _mean_reward(window: Window, keys: Sequence[Key]) -> float:
    by_key = {s.key: s for s in window.samples}
    ordered = sorted(keys)
    return math.fsum(by_key[k].mean_reward for k in ordered) / len(ordered)


def ugcs_score(window: Window, p: float,
               metric_values: Mapping[Key, float] | None = None) -> CheckpointScore:
    """Mean reward over the top-p% hardest samples of the window."""
    if not window.samples:
        raise EmptyWindowError(f"empty window for checkpoint {window.checkpoint_step}")
    selected = select_top_hard(window, p, metric_values)
    return CheckpointScore(
        checkpoint_step=window.checkpoint_step,
        strategy="ugcs",
        value=_mean_reward(window, selected),
        selected_keys=tuple(selected),
    )


def train_reward_score(window: Window) -> CheckpointScore:
    """Mean reward over every sample in the window."""
    if not window.samples:
        raise EmptyWindowError(f"empty window for checkpoint {window.checkpoint_step}")
    keys = window.keys()
    return CheckpointScore(
        checkpoint_step=window.checkpoint_step,
        strategy="train_reward",
        value=_mean_reward(window, keys),
        selected_keys=tuple(keys),
    )


def top_reward_score(window: Window, p: float) -> CheckpointScore:
    """Mean reward over the top-p% highest-reward samples (no uncertainty)."""
    if not window.samples:
        raise EmptyWindowError(f"empty window for checkpoint {window.checkpoint_step}")
    ranked = sorted(window.samples, key=lambda s: (-s.mean_reward, s.key))
    selected = [s.key for s in ranked[: subset_size(p, len(window))]]
    return CheckpointScore(
        checkpoint_step=window.checkpoint_step,
        strategy="top_reward",
        value=_mean_reward(window, selected),
        selected_keys=tuple(selected),
    )


def val_reward_score(val_samples: Iterable[AggregatedSample],
                     checkpoint_step: int) -> CheckpointScore:
    """Mean of per-sample mean rewards on the validation log at this step.

    Validation logs use the training schema with ``step`` set to the
    checkpoint step being evaluated; any validation-set size is accepted.
    """
    at_step = sorted(
        (s for s in val_samples if s.step == checkpoint_step), key=lambda s: s.key
    )
    if not at_step:
        raise MissingValidationError(
            f"validation log has no records for checkpoint {checkpoint_step}"
        )
    value = math.fsum(s.mean_reward for s in at_step) / len(at_step)
    return CheckpointScore(
        checkpoint_step=checkpoint_step, strategy="val_reward", value=value
    )


def last_checkpoint_score(manifest: RunManifest, checkpoint_step: int) -> CheckpointScore:
    """Selection-by-recency encoded as a score: 1 at the final manifest
    checkpoint, 0 everywhere else."""
    value = 1.0 if checkpoint_step == manifest.final_checkpoint else 0.0
    return CheckpointScore(
        checkpoint_step=checkpoint_step, strategy="last_checkpoint", value=value
    )


def score_checkpoint(
    strategy: str,
    checkpoint_step: int,
    *,
    samples: Iterable[AggregatedSample],
    manifest: RunManifest,
    params: ScoreParams,
    val_samples: Iterable[AggregatedSample] | None = None,
    metric_values: Mapping[Key, float] | None = None,
) -> CheckpointScore:
    """Score one checkpoint under one registered strategy.

    Window strategies raise EmptyWindowError and val_reward raises
    MissingValidationError when their inputs are missing; callers that rank
    whole runs treat both as "skip this checkpoint".
    """
    if strategy not in STRATEGIES:
        raise ConfigError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")
    if strategy == "last_checkpoint":
        return last_checkpoint_score(manifest, checkpoint_step)
    if strategy == "val_reward":
        if val_samples is None:
            raise MissingValidationError("val_reward strategy needs a validation log")
        return val_reward_score(val_samples, checkpoint_step)
    window = extract_window(samples, checkpoint_step, params.delta)
    if strategy == "ugcs":
        return ugcs_score(window, params.p, metric_values)
    if strategy == "train_reward":
        return train_reward_score(window)
    return top_reward_score(window, params.p)
