"""Per-answer and per-sample difficulty metrics.

Five metrics are supported. ANLL and NLL are computed on the fly from the
log-probabilities in the training log, so a sample's difficulty tracks the
model's current state. The three ``pre_*`` metrics are static per-question
scores loaded from a table that was computed once, before training.

All metrics are oriented so that higher means harder.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Mapping, Sequence

from .errors import (
    MissingPrecomputedScoreError,
    SchemaError,
    TooFewGenerationsError,
)

if TYPE_CHECKING:
    from .records import AnswerRecord, Key


class MetricKind(str, Enum):
    ANLL = "anll"
    NLL = "nll"
    PRE_ANLL = "pre_anll"
    PRE_NLL = "pre_nll"
    PRE_CONSISTENCY = "pre_consistency"

    @property
    def is_on_the_fly(self) -> bool:
        return self in (MetricKind.ANLL, MetricKind.NLL)


def anll(record: "AnswerRecord") -> float:
    """Average negative log-likelihood of one answer: -(1/T) * sum(log p).

    Depends on the evidence only through its sum, so token-level and
    sum-level evidence with equal totals give equal values.
    """
    return -record.total_logprob() / record.num_tokens + 0.0


def nll(record: "AnswerRecord") -> float:
    """Unnormalized negative log-likelihood, defined as anll * num_tokens."""
    return anll(record) * record.num_tokens


def per_answer_value(record: "AnswerRecord", kind: MetricKind) -> float:
    if kind is MetricKind.ANLL:
        return anll(record)
    if kind is MetricKind.NLL:
        return nll(record)
    raise ValueError(f"{kind.value} has no per-answer value; it is precomputed")


def consistency_score(correctness_bits: Sequence[int]) -> float:
    """Population variance of correctness bits: q*(1-q) for accuracy q.

    Maximal (0.25) when the generations are split evenly, zero when they all
    agree, so ambiguous questions count as hard.
    """
    n = len(correctness_bits)
    if n < 2:
        raise TooFewGenerationsError(f"need >= 2 correctness bits, got {n}")
    for bit in correctness_bits:
        if bit not in (0, 1):
            raise ValueError(f"correctness bits must be 0 or 1, got {bit!r}")
    q = math.fsum(correctness_bits) / n
    return q * (1.0 - q)


def consistency_table(correctness: Mapping[str, Sequence[int]]) -> dict[str, float]:
    """Build a pre_consistency score table from per-question correctness bits."""
    return {sid: consistency_score(bits) for sid, bits in correctness.items()}


@dataclass(frozen=True)
class DifficultyMetric:
    """A metric kind plus, for precomputed kinds, its sample_id -> score table."""

    kind: MetricKind
    table: Mapping[str, float] | None = None

    def __post_init__(self):
        if self.kind.is_on_the_fly:
            if self.table is not None:
                raise SchemaError(f"{self.kind.value} takes no score table")
        elif self.table is None:
            raise SchemaError(f"{self.kind.value} requires a precomputed score table")

    @property
    def is_on_the_fly(self) -> bool:
        return self.kind.is_on_the_fly

    def lookup(self, sample_id: str) -> float:
        assert self.table is not None
        try:
            return self.table[sample_id]
        except KeyError:
            raise MissingPrecomputedScoreError(
                f"no precomputed {self.kind.value} score for sample {sample_id!r}"
            ) from None

    @classmethod
    def anll_metric(cls) -> "DifficultyMetric":
        return cls(MetricKind.ANLL)

    @classmethod
    def nll_metric(cls) -> "DifficultyMetric":
        return cls(MetricKind.NLL)

    @classmethod
    def precomputed(cls, kind: MetricKind | str, table: Mapping[str, float]) -> "DifficultyMetric":
        return cls(MetricKind(kind), dict(table))


def sample_difficulty(key: "Key", answers: Iterable["AnswerRecord"],
                      metric: DifficultyMetric) -> float:
    """Difficulty of one (step, sample_id) unit under a metric.

    On-the-fly kinds average the per-answer metric over the answers, summed
    in answer_index order for reproducibility. Precomputed kinds ignore the
    answers and return the static table value, identical at every step.
    """
    if not metric.is_on_the_fly:
        return metric.lookup(key[1])
    ordered = sorted(answers, key=lambda r: r.answer_index)
    if not ordered:
        raise ValueError(f"no answers supplied for sample {key}")
    values = [per_answer_value(r, metric.kind) for r in ordered]
    return math.fsum(values) / len(values)


def load_score_table(path: str | Path) -> dict[str, float]:
    """Load a precomputed difficulty table: a JSON object of sample_id -> float."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"score table is not valid JSON: {exc.msg}") from exc
    if not isinstance(obj, dict):
        raise SchemaError("score table must be a JSON object mapping sample_id to score")
    table: dict[str, float] = {}
    for sid, value in obj.items():
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise SchemaError(f"score for sample {sid!r} must be a number, got {value!r}")
        table[sid] = float(value)
    return table
