"""Seeded generator of synthetic RL training logs with known ground truth.

The generator models a run at desk scale so selection strategies can be
compared without any LLM. Each question carries a fixed latent difficulty
d and a fixed learnability r (how much of the model's improvement reaches
it); the model's competence against question s at step t is

    margin(t, s) = base(t, s) + kappa * w(-base(t, s)) * h(t)
    base(t, s)   = r_s * g(t) + m(s, t) - d_s

with three dynamic channels:

* g(t): broad ability, a drifting random walk. Every sample reflects it in
  proportion to its learnability, so as g grows, fast-learning questions
  saturate while slow-learning ones stay at the frontier. A question that
  was hard for an early checkpoint can be easy for a later one, which is
  what separates adaptive difficulty estimates from precomputed tables.
* h(t): deep skill, an independent random walk (drift of its own, noise
  shared with g), revealed only at the model's current frontier: its
  contribution is scaled by kappa and by the gate
  w = sigmoid((hardness - mid) / scale), where hardness is the h-free
  part of -margin. Problems the model still finds challenging are the
  ones whose outcomes carry information about robustness; problems it
  has already learned reveal nothing. This encodes the premise under
  test.
* m(s, t): per-sample memorization, growing by a fixed gain each time the
  question is trained on. It inflates training rewards without improving
  the model, the classic failure mode that reward-averaging selectors are
  blind to.

Each of the N sampled answers is correct with probability
sigmoid(alpha * margin). Uncertainty evidence reflects learnability-scaled
broad competence and memorization but not the deep skill:

    ANLL(t, s) = softplus(d_s - r_s * g(t) - m(s, t)) + nonnegative noise

serialized as sum_logprob = -ANLL * T. Keeping h out of the evidence
means uncertainty serves to locate the frontier, while the information
about generalization lives in the rewards earned there. With kappa and
the memorization gain at zero and learnability pinned to 1 everything
collapses to the plain one-ability model:
reward ~ Bernoulli(sigmoid(alpha * (g(t) - d_s))),
ANLL = softplus(d_s - g(t)) + noise.

Ground truth for a checkpoint is its mean success probability on a fixed,
unseen evaluation pool whose difficulties are shifted harder by
``eval_difficulty_shift``; neither memorization nor training exposure
reaches it. Everything is a pure function of (config, seed): the random
source is numpy's PCG64 bit generator, whose stream is stable across
platforms, with one fixed seed sequence per purpose (run dynamics /
precomputed tables).

This generative structure is an artifact of the test harness, not a claim
about real RL training.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterator, Mapping

import numpy as np

from .difficulty import DifficultyMetric, MetricKind
from .errors import ConfigError
from .records import AggregatedSample, AnswerRecord, RunManifest

_PRE_TABLE_STREAM = 1  # spawn key of the substream for precomputed tables
_PRE_TABLE_N = 8  # generations per question for simulated consistency bits


@dataclass(frozen=True)
class SyntheticRunConfig:
    """Parameters of one synthetic run. Defaults mirror the common recipe
    (8x8 batches, 1000 steps, checkpoint every 100 steps)."""

    seed: int = 0
    total_steps: int = 1000
    batch_size: int = 8
    n_per_question: int = 8
    save_every: int = 100
    n_questions: int = 4000
    max_response_len: int = 1200
    # ability dynamics (shared by the broad and deep-skill walks)
    init_ability: float = 0.3
    ability_drift: float = 0.002
    ability_noise_sd: float = 0.04
    # per-question difficulty
    difficulty_mean: float = 0.0
    difficulty_sd: float = 1.0
    # per-question learnability, uniform in [min, max]
    learn_rate_min: float = 0.2
    learn_rate_max: float = 1.8
    # optional dead-hard tier: a fraction of questions shifted far beyond
    # reach, planting a known optimum for the top-p% sweep
    hard_fraction: float = 0.0
    hard_shift: float = 8.0
    # deep-skill channel: gate on current hardness (-base margin) and the
    # skill's own drift; noise is shared with the broad-ability walk
    hard_skill_coupling: float = 4.0
    hard_skill_gate_mid: float = 1.0
    hard_skill_gate_scale: float = 0.4
    deep_skill_drift: float = 0.0
    # reward and uncertainty model
    reward_sharpness: float = 2.0
    anll_noise_sd: float = 0.15
    memorization_gain: float = 1.5
    # evaluation / validation pools
    eval_difficulty_shift: float = 2.0
    eval_pool_size: int = 512
    val_pool_size: int = 100

    def __post_init__(self):
        if min(self.total_steps, self.batch_size, self.n_per_question,
               self.save_every, self.n_questions, self.max_response_len,
               self.eval_pool_size, self.val_pool_size) < 1:
            raise ConfigError("synthetic config size fields must all be >= 1")
        if self.batch_size > self.n_questions:
            raise ConfigError("batch_size cannot exceed n_questions")
        if self.reward_sharpness <= 0:
            raise ConfigError("reward_sharpness must be > 0")
        for name in ("ability_noise_sd", "difficulty_sd", "anll_noise_sd"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        if not 0.0 <= self.hard_fraction < 1.0:
            raise ConfigError("hard_fraction must be in [0, 1)")
        if self.memorization_gain < 0:
            raise ConfigError("memorization_gain must be >= 0")
        if self.hard_skill_coupling < 0:
            raise ConfigError("hard_skill_coupling must be >= 0")
        if self.hard_skill_gate_scale <= 0:
            raise ConfigError("hard_skill_gate_scale must be > 0")
        if not 0.0 <= self.learn_rate_min <= self.learn_rate_max:
            raise ConfigError("need 0 <= learn_rate_min <= learn_rate_max")

    def manifest(self) -> RunManifest:
        return RunManifest(
            n_per_question=self.n_per_question,
            batch_size=self.batch_size,
            total_steps=self.total_steps,
            save_every=self.save_every,
            max_response_len=self.max_response_len,
        )

    def to_json_obj(self) -> dict:
        return {f: getattr(self, f) for f in self.__dataclass_fields__}

    @classmethod
    def from_json_obj(cls, obj: Mapping) -> "SyntheticRunConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(obj) - known
        if unknown:
            raise ConfigError(f"unknown synthetic config fields: {sorted(unknown)}")
        return cls(**dict(obj))


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return np.exp(-np.logaddexp(0.0, -x))


def _softplus(x: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, x)


class SyntheticRun:
    """Fully materialized draws of one synthetic run.

    Attributes of interest: ``truth`` (checkpoint_step -> true
    generalization), ``manifest``, and the accessors for records,
    aggregates, validation data, and precomputed difficulty tables.
    """

    def __init__(self, config: SyntheticRunConfig):
        self.config = config
        self.manifest = config.manifest()
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(config.seed)))

        c = config
        e, b, n, q = c.total_steps, c.batch_size, c.n_per_question, c.n_questions

        # fixed per-question difficulties, with the optional unreachable tier
        # occupying the first round(hard_fraction * Q) question indices
        d = rng.normal(c.difficulty_mean, c.difficulty_sd, size=q)
        n_dead = int(round(c.hard_fraction * q))
        hard = np.arange(q) < n_dead
        self.difficulty = d + np.where(hard, c.hard_shift, 0.0)
        self.hard_tier = hard
        self.learn_rate = rng.uniform(c.learn_rate_min, c.learn_rate_max, size=q)

        # two random-walk skills; index t-1 = state after update t
        increments = c.ability_drift + rng.normal(0.0, c.ability_noise_sd, size=e)
        self.ability = c.init_ability + np.cumsum(increments)
        deep_increments = c.deep_skill_drift + rng.normal(0.0, c.ability_noise_sd, size=e)
        self.deep_skill = np.cumsum(deep_increments)

        # per-step batches, drawn without replacement inside each step. The
        # dead tier is sampled stratified, round(hard_fraction * B) slots per
        # batch, so every training window contains the same tier share and
        # the tier boundary sits at a deterministic percentile.
        dead_slots = int(round(c.hard_fraction * b))
        if dead_slots == 0:
            self.batch_ids = np.argsort(rng.random((e, q)), axis=1)[:, :b]
        else:
            dead_pick = np.argsort(rng.random((e, n_dead)), axis=1)[:, :dead_slots]
            live_pick = n_dead + np.argsort(
                rng.random((e, q - n_dead)), axis=1
            )[:, : b - dead_slots]
            self.batch_ids = np.concatenate([dead_pick, live_pick], axis=1)

        # exposure count of each drawn question before its step
        expo = np.zeros((e, b))
        counts = np.zeros(q)
        for t in range(e):
            ids = self.batch_ids[t]
            expo[t] = counts[ids]
            counts[ids] += 1.0
        boost = c.memorization_gain * expo

        d_batch = self.difficulty[self.batch_ids]
        lr_batch = self.learn_rate[self.batch_ids]
        base_margin = lr_batch * self.ability[:, None] + boost - d_batch
        gate = self._skill_gate(-base_margin)
        reward_margin = (base_margin
                         + c.hard_skill_coupling * gate * self.deep_skill[:, None])
        anll_margin = base_margin
        p_correct = _sigmoid(c.reward_sharpness * reward_margin)
        self.rewards = (rng.random((e, b, n)) < p_correct[:, :, None]).astype(np.float64)
        self.anll = _softplus(-anll_margin)[:, :, None] + np.abs(
            rng.normal(0.0, c.anll_noise_sd, size=(e, b, n))
        )
        self.tokens = rng.integers(1, c.max_response_len + 1, size=(e, b, n))

        # unseen evaluation pool, shifted harder; memorization cannot reach it
        self.eval_difficulty = rng.normal(
            c.difficulty_mean + c.eval_difficulty_shift, c.difficulty_sd,
            size=c.eval_pool_size,
        )
        self.eval_learn_rate = rng.uniform(c.learn_rate_min, c.learn_rate_max,
                                           size=c.eval_pool_size)
        self.truth: dict[int, float] = {}
        for step in self.manifest.checkpoint_steps:
            eval_base = (self.eval_learn_rate * self.ability[step - 1]
                         - self.eval_difficulty)
            eval_gate = self._skill_gate(-eval_base)
            eval_margin = (eval_base
                           + c.hard_skill_coupling * eval_gate * self.deep_skill[step - 1])
            self.truth[step] = float(np.mean(_sigmoid(c.reward_sharpness * eval_margin)))

        # validation pool: unseen questions from the training distribution,
        # N completions per question at every checkpoint
        self.val_difficulty = rng.normal(c.difficulty_mean, c.difficulty_sd,
                                         size=c.val_pool_size)
        self.val_learn_rate = rng.uniform(c.learn_rate_min, c.learn_rate_max,
                                          size=c.val_pool_size)
        ck = np.array(self.manifest.checkpoint_steps)
        val_base = (self.val_learn_rate[None, :] * self.ability[ck - 1][:, None]
                    - self.val_difficulty[None, :])
        val_gate = self._skill_gate(-val_base)
        val_reward_margin = (val_base
                             + c.hard_skill_coupling * val_gate
                             * self.deep_skill[ck - 1][:, None])
        val_anll_margin = val_base
        val_p = _sigmoid(c.reward_sharpness * val_reward_margin)
        self.val_rewards = (
            rng.random((len(ck), c.val_pool_size, n)) < val_p[:, :, None]
        ).astype(np.float64)
        self.val_anll = _softplus(-val_anll_margin)[:, :, None] + np.abs(
            rng.normal(0.0, c.anll_noise_sd, size=self.val_rewards.shape)
        )
        self.val_tokens = rng.integers(1, c.max_response_len + 1, size=self.val_rewards.shape)

        self._pre_tables: dict[MetricKind, dict[str, float]] = {}

    def _skill_gate(self, hardness: np.ndarray) -> np.ndarray:
        c = self.config
        return _sigmoid((hardness - c.hard_skill_gate_mid) / c.hard_skill_gate_scale)

    # -- identifiers ---------------------------------------------------------

    def question_id(self, index: int) -> str:
        return f"q{index:04d}"

    def val_question_id(self, index: int) -> str:
        return f"v{index:04d}"

    # -- training log --------------------------------------------------------

    def records(self) -> Iterator[AnswerRecord]:
        """The run as answer records, in (step, batch position, answer) order."""
        c = self.config
        for t in range(c.total_steps):
            for b_pos in range(c.batch_size):
                sid = self.question_id(int(self.batch_ids[t, b_pos]))
                for i in range(c.n_per_question):
                    tokens = int(self.tokens[t, b_pos, i])
                    yield AnswerRecord(
                        step=t + 1,
                        sample_id=sid,
                        answer_index=i,
                        reward=float(self.rewards[t, b_pos, i]),
                        num_tokens=tokens,
                        sum_logprob=-float(self.anll[t, b_pos, i]) * tokens,
                    )

    def aggregates(self, metric: DifficultyMetric | None = None) -> list[AggregatedSample]:
        """Per-(step, question) aggregates, bypassing serialization.

        Values match aggregating `records()` to within float rounding of
        the sum_logprob round trip.
        """
        metric = metric if metric is not None else DifficultyMetric.anll_metric()
        mean_reward = np.mean(self.rewards, axis=2)
        if metric.kind is MetricKind.ANLL:
            value = np.mean(self.anll, axis=2)
        elif metric.kind is MetricKind.NLL:
            value = np.mean(self.anll * self.tokens, axis=2)
        else:
            value = None
        out: list[AggregatedSample] = []
        c = self.config
        for t in range(c.total_steps):
            for b_pos in range(c.batch_size):
                sid = self.question_id(int(self.batch_ids[t, b_pos]))
                if value is not None:
                    difficulty_value = float(value[t, b_pos])
                else:
                    difficulty_value = metric.lookup(sid)
                out.append(AggregatedSample(
                    key=(t + 1, sid),
                    mean_reward=float(mean_reward[t, b_pos]),
                    mean_anll=difficulty_value,
                    n_answers=c.n_per_question,
                ))
        return out

    # -- validation log --------------------------------------------------------

    def val_records(self) -> Iterator[AnswerRecord]:
        """Validation log: N completions per held-out question, with ``step``
        set to the checkpoint step under evaluation."""
        c = self.config
        for ci, step in enumerate(self.manifest.checkpoint_steps):
            for j in range(c.val_pool_size):
                sid = self.val_question_id(j)
                for i in range(c.n_per_question):
                    tokens = int(self.val_tokens[ci, j, i])
                    yield AnswerRecord(
                        step=step,
                        sample_id=sid,
                        answer_index=i,
                        reward=float(self.val_rewards[ci, j, i]),
                        num_tokens=tokens,
                        sum_logprob=-float(self.val_anll[ci, j, i]) * tokens,
                    )

    def val_aggregates(self) -> list[AggregatedSample]:
        mean_reward = np.mean(self.val_rewards, axis=2)
        mean_anll = np.mean(self.val_anll, axis=2)
        out = []
        for ci, step in enumerate(self.manifest.checkpoint_steps):
            for j in range(self.config.val_pool_size):
                out.append(AggregatedSample(
                    key=(step, self.val_question_id(j)),
                    mean_reward=float(mean_reward[ci, j]),
                    mean_anll=float(mean_anll[ci, j]),
                    n_answers=self.config.n_per_question,
                ))
        return out

    # -- precomputed difficulty tables ----------------------------------------

    def pre_table(self, kind: MetricKind | str) -> dict[str, float]:
        """Static difficulty table as an external model would have produced
        it before training: measured once against the initial ability."""
        kind = MetricKind(kind)
        if kind.is_on_the_fly:
            raise ConfigError(f"{kind.value} is not a precomputed metric")
        if kind not in self._pre_tables:
            self._pre_tables.update(self._draw_pre_tables())
        return self._pre_tables[kind]

    def pre_metric(self, kind: MetricKind | str) -> DifficultyMetric:
        return DifficultyMetric.precomputed(MetricKind(kind), self.pre_table(kind))

    def _draw_pre_tables(self) -> dict[MetricKind, dict[str, float]]:
        c = self.config
        rng = np.random.Generator(np.random.PCG64(
            np.random.SeedSequence((c.seed, _PRE_TABLE_STREAM))
        ))
        q = c.n_questions
        # measured against the pre-training model: broad ability at its
        # initial value, deep skill and memorization at zero. The likelihood
        # scores come from one greedy generation per question; consistency
        # needs several sampled generations.
        margin = self.learn_rate * c.init_ability - self.difficulty
        anll_scores = _softplus(-margin) + np.abs(
            rng.normal(0.0, c.anll_noise_sd, size=q)
        )
        tokens = rng.integers(1, c.max_response_len + 1, size=q)
        bits = (
            rng.random((q, _PRE_TABLE_N))
            < _sigmoid(c.reward_sharpness * margin)[:, None]
        ).astype(np.float64)
        accuracy = np.mean(bits, axis=1)
        nll_scores = anll_scores * tokens
        consistency = accuracy * (1.0 - accuracy)
        ids = [self.question_id(i) for i in range(q)]
        return {
            MetricKind.PRE_ANLL: dict(zip(ids, map(float, anll_scores))),
            MetricKind.PRE_NLL: dict(zip(ids, map(float, nll_scores))),
            MetricKind.PRE_CONSISTENCY: dict(zip(ids, map(float, consistency))),
        }


def simulate_run(config: SyntheticRunConfig) -> SyntheticRun:
    """Materialize one seeded run."""
    return SyntheticRun(config)


def generate_run(config: SyntheticRunConfig) -> tuple[Iterator[AnswerRecord], dict[int, float]]:
    """The record stream and ground-truth table of one seeded run."""
    run = SyntheticRun(config)
    return run.records(), run.truth


def selection_regret(truth: Mapping[int, float], winner: int) -> float:
    """How much true generalization the selected checkpoint left on the
    table: max over checkpoints minus the winner's value. Zero iff the
    winner attains the maximum."""
    if winner not in truth:
        raise KeyError(f"winner step {winner} has no ground-truth entry")
    return max(truth.values()) - truth[winner]


def stationary_config(seed: int = 0) -> SyntheticRunConfig:
    """Steady-improvement dynamics: a single smoothly rising ability,
    homogeneous learnability, no memorization and no second skill factor,
    with batches large enough that even a 10-step window carries a stable
    signal. Under these dynamics the winner should not depend on the
    window size."""
    return SyntheticRunConfig(
        seed=seed,
        batch_size=48,
        ability_drift=0.004,
        ability_noise_sd=0.005,
        difficulty_sd=2.0,
        learn_rate_min=1.0,
        learn_rate_max=1.0,
        hard_skill_coupling=0.0,
        memorization_gain=0.0,
    )


# Dead-tier share of the planted-p config: one unreachable question per
# batch of 8. Any top-p% selection at or below the tier share sees only
# those questions, whose reward is identically ~0, so the sweep's useful
# range starts at the first whole percent past the tier.
PLANTED_HARD_FRACTION = 0.125


def planted_p_config(seed: int = 0) -> SyntheticRunConfig:
    """Config with a known-optimal top-p%: the dead tier fills the hardest
    ``PLANTED_HARD_FRACTION`` of every window, and single-factor upward
    dynamics make the all-dead (tied, earliest-wins) selections reliably
    suboptimal. Memorization is disabled so the tier cannot erode over the
    run."""
    return SyntheticRunConfig(
        seed=seed,
        hard_fraction=PLANTED_HARD_FRACTION,
        hard_shift=12.0,
        memorization_gain=0.0,
        hard_skill_coupling=0.0,
        learn_rate_min=1.0,
        learn_rate_max=1.0,
        ability_drift=0.003,
        ability_noise_sd=0.02,
    )


def planted_optimal_p(config: SyntheticRunConfig) -> int:
    """The planted sweep optimum: the first whole-percent p whose top-p%
    subset must reach past the dead tier."""
    dead_slots = int(round(config.hard_fraction * config.batch_size))
    if config.hard_fraction <= 0 or dead_slots == 0:
        raise ConfigError("config has no planted dead tier")
    return int(math.floor(100.0 * dead_slots / config.batch_size)) + 1
