"""Training-log data model: records, manifests, parsing, and aggregation.

A training log is UTF-8 newline-delimited JSON, one answer per line. Each
line carries a reward and log-probability evidence for one of the N answers
the policy generated for one question at one training step. Aggregation
reduces the answers of each (step, sample_id) pair to a mean reward and a
mean difficulty, which is all the scoring layer ever looks at.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from io import IOBase
from pathlib import Path
from typing import IO, Iterable, Iterator, Mapping, Sequence, Union

from . import difficulty as _difficulty
from .errors import (
    DuplicateKeyError,
    EmptyInputError,
    InvariantError,
    SchemaError,
)

logger = logging.getLogger(__name__)

# Positive per-token log-probabilities up to this size are treated as
# floating-point artifacts of the training framework and clamped to 0.
# Anything larger is a hard error: it would imply a probability > 1.
LOGPROB_CLAMP_TOL = 1e-6

Key = tuple[int, str]

_SOURCE = Union[str, Path, IO[bytes], IO[str], Iterable[Union[str, bytes]]]


@dataclass(frozen=True)
class AnswerRecord:
    """One generated answer for one question at one training step.

    Exactly one of ``token_logprobs`` / ``sum_logprob`` is set; both encode
    the same evidence (per-token log-probabilities, or their sum).
    """

    step: int
    sample_id: str
    answer_index: int
    reward: float
    num_tokens: int
    token_logprobs: tuple[float, ...] | None = None
    sum_logprob: float | None = None

    @property
    def key(self) -> Key:
        return (self.step, self.sample_id)

    def total_logprob(self) -> float:
        """Sum of per-token log-probabilities, whichever evidence is present."""
        if self.token_logprobs is not None:
            return math.fsum(self.token_logprobs)
        assert self.sum_logprob is not None
        return self.sum_logprob

    def to_json_obj(self) -> dict:
        obj: dict = {
            "step": self.step,
            "sample_id": self.sample_id,
            "answer_index": self.answer_index,
            "reward": self.reward,
            "num_tokens": self.num_tokens,
        }
        if self.token_logprobs is not None:
            obj["token_logprobs"] = list(self.token_logprobs)
        else:
            obj["sum_logprob"] = self.sum_logprob
        return obj

    def to_json_line(self) -> str:
        return json.dumps(self.to_json_obj())


def _require(obj: Mapping, name: str, line_no: int | None):
    if name not in obj:
        raise SchemaError(f"missing field {name!r}", line_no)
    return obj[name]


def _as_int(value, name: str, line_no: int | None) -> int:
    # bool is an int subclass; rejecting it catches true/false typos.
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaError(f"field {name!r} must be an integer, got {value!r}", line_no)
    return value


def _as_float(value, name: str, line_no: int | None) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"field {name!r} must be a number, got {value!r}", line_no)
    out = float(value)
    if not math.isfinite(out):
        raise SchemaError(f"field {name!r} must be finite, got {value!r}", line_no)
    return out


def _clamp_logprob(value: float, name: str, line_no: int | None) -> float:
    if value <= 0.0:
        return value
    if value <= LOGPROB_CLAMP_TOL:
        return 0.0
    raise InvariantError(
        f"{name} is {value!r}, above the {LOGPROB_CLAMP_TOL} clamp tolerance",
        line_no,
    )


def record_from_obj(
    obj: Mapping,
    line_no: int | None = None,
    n_per_question: int | None = None,
) -> AnswerRecord:
    """Validate one decoded JSON object and build an AnswerRecord.

    Raises SchemaError for missing or ill-typed fields and InvariantError
    for domain violations (positive log-probs beyond tolerance, token-count
    mismatch, out-of-range indices).
    """
    if not isinstance(obj, Mapping):
        raise SchemaError(f"expected a JSON object, got {type(obj).__name__}", line_no)

    step = _as_int(_require(obj, "step", line_no), "step", line_no)
    if step < 1:
        raise InvariantError(f"step must be >= 1, got {step}", line_no)

    sample_id = _require(obj, "sample_id", line_no)
    if not isinstance(sample_id, str) or not sample_id:
        raise SchemaError(f"field 'sample_id' must be a non-empty string", line_no)

    answer_index = _as_int(_require(obj, "answer_index", line_no), "answer_index", line_no)
    if answer_index < 0:
        raise InvariantError(f"answer_index must be >= 0, got {answer_index}", line_no)
    if n_per_question is not None and answer_index >= n_per_question:
        raise InvariantError(
            f"answer_index {answer_index} outside [0, {n_per_question})", line_no
        )

    reward = _as_float(_require(obj, "reward", line_no), "reward", line_no)

    num_tokens = _as_int(_require(obj, "num_tokens", line_no), "num_tokens", line_no)
    if num_tokens < 1:
        raise InvariantError(f"num_tokens must be >= 1, got {num_tokens}", line_no)

    has_tokens = "token_logprobs" in obj
    has_sum = "sum_logprob" in obj
    if has_tokens == has_sum:
        raise SchemaError(
            "exactly one of 'token_logprobs' / 'sum_logprob' must be present", line_no
        )

    token_logprobs: tuple[float, ...] | None = None
    sum_logprob: float | None = None
    if has_tokens:
        raw = obj["token_logprobs"]
        if not isinstance(raw, Sequence) or isinstance(raw, (str, bytes)):
            raise SchemaError("field 'token_logprobs' must be a list", line_no)
        if len(raw) != num_tokens:
            raise InvariantError(
                f"token_logprobs has {len(raw)} entries but num_tokens is {num_tokens}",
                line_no,
            )
        token_logprobs = tuple(
            _clamp_logprob(_as_float(v, "token_logprobs[]", line_no), "token log-prob", line_no)
            for v in raw
        )
    else:
        sum_logprob = _clamp_logprob(
            _as_float(obj["sum_logprob"], "sum_logprob", line_no), "sum_logprob", line_no
        )

    return AnswerRecord(
        step=step,
        sample_id=sample_id,
        answer_index=answer_index,
        reward=reward,
        num_tokens=num_tokens,
        token_logprobs=token_logprobs,
        sum_logprob=sum_logprob,
    )


def _iter_lines(source: _SOURCE) -> Iterator[str]:
    if isinstance(source, (str, Path)):
        with open(source, "rb") as fh:
            yield from (raw.decode("utf-8") for raw in fh)
        return
    if isinstance(source, IOBase) or hasattr(source, "read"):
        for raw in source:
            yield raw.decode("utf-8") if isinstance(raw, bytes) else raw
        return
    for raw in source:
        yield raw.decode("utf-8") if isinstance(raw, bytes) else raw


def parse_log_stream(
    source: _SOURCE,
    manifest: "RunManifest | None" = None,
    *,
    seen_keys: set[tuple[int, str, int]] | None = None,
    on_error=None,
) -> Iterator[AnswerRecord]:
    """Parse newline-delimited JSON answer records, in file order.

    ``source`` may be a path, an open binary/text file, or any iterable of
    lines. Blank lines are skipped. By default the first malformed line
    raises (SchemaError / InvariantError / DuplicateKeyError, each carrying
    the 1-based line number); passing ``on_error`` downgrades bad lines to a
    callback and keeps going.

    ``seen_keys`` may be shared across calls to extend duplicate detection
    over several files of one logical stream.

    ``manifest`` is optional; when present, answer_index is checked against
    its ``n_per_question``.
    """
    n = manifest.n_per_question if manifest is not None else None
    seen = seen_keys if seen_keys is not None else set()
    for line_no, line in enumerate(_iter_lines(source), start=1):
        text = line.strip()
        if not text:
            continue
        try:
            try:
                obj = json.loads(text)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"invalid JSON: {exc.msg}", line_no) from exc
            record = record_from_obj(obj, line_no, n)
            full_key = (record.step, record.sample_id, record.answer_index)
            if full_key in seen:
                raise DuplicateKeyError(f"duplicate record {full_key}", line_no)
            seen.add(full_key)
        except (SchemaError, InvariantError, DuplicateKeyError) as exc:
            if on_error is None:
                raise
            on_error(exc)
            continue
        yield record


@dataclass(frozen=True)
class AggregatedSample:
    """Per-(step, sample_id) aggregate over the N answers of one question.

    ``mean_anll`` holds the sample's difficulty under the metric the
    aggregation ran with: the mean per-answer ANLL for the default metric,
    the mean per-answer NLL under the NLL metric, or the static table value
    for precomputed metrics.
    """

    key: Key
    mean_reward: float
    mean_anll: float
    n_answers: int

    @property
    def step(self) -> int:
        return self.key[0]

    @property
    def sample_id(self) -> str:
        return self.key[1]


class SampleAggregator:
    """Incremental group-by of answer records into per-sample aggregates.

    Accumulation is deterministic regardless of arrival order: answers are
    sorted by answer_index and summed with math.fsum at finalization, so
    identical record multisets always produce bit-identical aggregates.
    """

    def __init__(self, metric: "_difficulty.DifficultyMetric | None" = None,
                 expected_n: int | None = None):
        self.metric = metric if metric is not None else _difficulty.DifficultyMetric.anll_metric()
        self.expected_n = expected_n
        # key -> list of (answer_index, reward, per-answer difficulty or None)
        self._groups: dict[Key, list[tuple[int, float, float | None]]] = {}

    def add(self, record: AnswerRecord) -> None:
        value: float | None = None
        if self.metric.is_on_the_fly:
            value = _difficulty.per_answer_value(record, self.metric.kind)
        group = self._groups.setdefault(record.key, [])
        group.append((record.answer_index, record.reward, value))

    def add_all(self, records: Iterable[AnswerRecord]) -> None:
        for record in records:
            self.add(record)

    def __len__(self) -> int:
        return len(self._groups)

    def finalize(self) -> dict[Key, AggregatedSample]:
        """Produce the aggregate map. The aggregator stays reusable."""
        if not self._groups:
            raise EmptyInputError("no records to aggregate")
        out: dict[Key, AggregatedSample] = {}
        for key in sorted(self._groups):
            answers = sorted(self._groups[key])
            n = len(answers)
            if self.expected_n is not None and n != self.expected_n:
                logger.warning(
                    "sample %s at step %d has %d answers, expected %d",
                    key[1], key[0], n, self.expected_n,
                )
            mean_reward = math.fsum(a[1] for a in answers) / n
            if self.metric.is_on_the_fly:
                mean_value = math.fsum(a[2] for a in answers) / n  # type: ignore[misc]
            else:
                mean_value = self.metric.lookup(key[1])
            out[key] = AggregatedSample(
                key=key, mean_reward=mean_reward, mean_anll=mean_value, n_answers=n
            )
        return out


def aggregate_samples(
    records: Iterable[AnswerRecord],
    metric: "_difficulty.DifficultyMetric | None" = None,
    expected_n: int | None = None,
) -> dict[Key, AggregatedSample]:
    """Group answer records by (step, sample_id) and average rewards and
    difficulties. Deterministic under any input permutation."""
    agg = SampleAggregator(metric, expected_n)
    agg.add_all(records)
    return agg.finalize()


@dataclass(frozen=True)
class RunManifest:
    """Static parameters of one training run.

    Defaults mirror a common GRPO recipe for small models: one question
    batch of 8 with 8 sampled answers each, 1000 steps, a checkpoint every
    100 steps, responses capped at 1200 tokens.
    """

    n_per_question: int = 8
    batch_size: int = 8
    total_steps: int = 1000
    save_every: int = 100
    max_response_len: int = 1200
    checkpoint_steps: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if min(self.n_per_question, self.batch_size, self.total_steps,
               self.save_every, self.max_response_len) < 1:
            raise SchemaError("manifest integer fields must all be >= 1")
        steps = tuple(self.checkpoint_steps)
        if not steps:
            steps = tuple(range(self.save_every, self.total_steps + 1, self.save_every))
        object.__setattr__(self, "checkpoint_steps", steps)
        if not self.checkpoint_steps:
            raise SchemaError("manifest defines no checkpoint steps")
        last = 0
        for step in self.checkpoint_steps:
            if step <= last:
                raise SchemaError("checkpoint_steps must be strictly ascending")
            last = step
        if self.checkpoint_steps[0] < 1 or self.checkpoint_steps[-1] > self.total_steps:
            raise SchemaError("checkpoint_steps must lie in [1, total_steps]")

    @property
    def final_checkpoint(self) -> int:
        return self.checkpoint_steps[-1]

    def to_json_obj(self) -> dict:
        return {
            "n_per_question": self.n_per_question,
            "batch_size": self.batch_size,
            "total_steps": self.total_steps,
            "save_every": self.save_every,
            "max_response_len": self.max_response_len,
            "checkpoint_steps": list(self.checkpoint_steps),
        }

    @classmethod
    def from_json_obj(cls, obj: Mapping) -> "RunManifest":
        if not isinstance(obj, Mapping):
            raise SchemaError("manifest must be a JSON object")
        kwargs = {}
        for name in ("n_per_question", "batch_size", "total_steps",
                     "save_every", "max_response_len"):
            if name in obj:
                kwargs[name] = _as_int(obj[name], name, None)
        if "checkpoint_steps" in obj:
            raw = obj["checkpoint_steps"]
            if not isinstance(raw, Sequence) or isinstance(raw, (str, bytes)):
                raise SchemaError("field 'checkpoint_steps' must be a list")
            kwargs["checkpoint_steps"] = tuple(
                _as_int(v, "checkpoint_steps[]", None) for v in raw
            )
        return cls(**kwargs)


def load_manifest(path: str | Path) -> RunManifest:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"manifest is not valid JSON: {exc.msg}") from exc
    return RunManifest.from_json_obj(obj)


def save_manifest(manifest: RunManifest, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest.to_json_obj(), fh, indent=2)
        fh.write("\n")


def write_log(records: Iterable[AnswerRecord], path: str | Path) -> int:
    """Serialize records to a newline-delimited JSON log. Returns line count."""
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(record.to_json_line())
            fh.write("\n")
            count += 1
    return count
