"""Training-loop logging hook.

Call ``on_step`` once per optimizer step with the rewards and
log-probabilities the trainer already computed; the hook appends one
newline-delimited JSON line per answer in the checkpoint-selection log
schema. It only ever reads values, buffers writes, and never raises out
of an I/O problem: a training run must not die because a log disk
hiccuped.
"""

from __future__ import annotations

import json
import logging
import math
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence, Union

logger = logging.getLogger(__name__)

EVIDENCE_MODES = ("token_logprobs", "sum_logprob")
LOGPROB_PHASES = ("pre_update", "post_update")

Answer = Union[Mapping, tuple]


@dataclass(frozen=True)
class HookConfig:
    """Where and how the hook writes.

    ``flush_every`` counts steps between durable flushes. ``evidence_mode``
    picks the serialized form of the log-probability evidence; the sum form
    writes one number per answer instead of one per token.
    ``manifest_fields`` echoes the run parameters into ``write_manifest``.
    ``logprob_phase`` records whether the trainer passes log-probs computed
    before or after the step's parameter update.
    """

    output_path: str | os.PathLike
    flush_every: int = 1
    evidence_mode: str = "token_logprobs"
    n_per_question: int = 8
    batch_size: int = 8
    total_steps: int = 1000
    save_every: int = 100
    max_response_len: int = 1200
    logprob_phase: str = "post_update"
    max_retries: int = 3
    retry_backoff_s: float = 0.05
    max_buffered_lines: int = 100_000

    def __post_init__(self):
        if self.flush_every < 1:
            raise ValueError("flush_every must be >= 1")
        if self.evidence_mode not in EVIDENCE_MODES:
            raise ValueError(f"evidence_mode must be one of {EVIDENCE_MODES}")
        if self.logprob_phase not in LOGPROB_PHASES:
            raise ValueError(f"logprob_phase must be one of {LOGPROB_PHASES}")
        if self.max_retries < 1:
            raise ValueError("max_retries must be >= 1")


def _answer_fields(answer: Answer):
    """Accept mappings or (reward, token_logprobs) / (reward, sum, n) tuples."""
    if isinstance(answer, Mapping):
        reward = answer["reward"]
        token_logprobs = answer.get("token_logprobs")
        sum_logprob = answer.get("sum_logprob")
        num_tokens = answer.get("num_tokens")
    elif isinstance(answer, tuple) and len(answer) == 2:
        reward, token_logprobs = answer
        sum_logprob = num_tokens = None
    elif isinstance(answer, tuple) and len(answer) == 3:
        reward, sum_logprob, num_tokens = answer
        token_logprobs = None
    else:
        raise ValueError(f"unsupported answer structure: {answer!r}")
    if token_logprobs is None and sum_logprob is None:
        raise ValueError("answer carries no log-probability evidence")
    if token_logprobs is not None:
        token_logprobs = [float(v) for v in token_logprobs]
        if num_tokens is None:
            num_tokens = len(token_logprobs)
    if num_tokens is None or num_tokens < 1:
        raise ValueError("num_tokens must be >= 1")
    return float(reward), token_logprobs, sum_logprob, int(num_tokens)


class TrainingLogHook:
    """Buffered writer for per-step (sample, answers) batches.

    One writer per output file; call from the training loop's thread only.
    """

    def __init__(self, config: HookConfig):
        self.config = config
        self._buffer: list[str] = []
        self._steps_since_flush = 0
        self._lines_written = 0
        self._lines_dropped = 0

    @property
    def lines_written(self) -> int:
        return self._lines_written

    @property
    def lines_dropped(self) -> int:
        return self._lines_dropped

    def on_step(self, step: int,
                batch: Iterable[tuple[str, Sequence[Answer]]]) -> int:
        """Record one optimizer step: B questions with N answers each.

        Returns the number of lines appended to the buffer. Malformed
        input raises (that is an integration bug); I/O trouble does not.
        """
        if step < 1:
            raise ValueError("step must be >= 1")
        appended = 0
        for sample_id, answers in batch:
            for index, answer in enumerate(answers):
                reward, token_logprobs, sum_logprob, num_tokens = _answer_fields(answer)
                obj = {
                    "step": int(step),
                    "sample_id": str(sample_id),
                    "answer_index": index,
                    "reward": reward,
                    "num_tokens": num_tokens,
                }
                if self.config.evidence_mode == "token_logprobs":
                    if token_logprobs is None:
                        raise ValueError(
                            "evidence_mode=token_logprobs but the answer only "
                            "carries a summed log-probability")
                    obj["token_logprobs"] = token_logprobs
                else:
                    if sum_logprob is None:
                        sum_logprob = math.fsum(token_logprobs)
                    obj["sum_logprob"] = float(sum_logprob)
                self._buffer.append(json.dumps(obj))
                appended += 1
        self._steps_since_flush += 1
        if self._steps_since_flush >= self.config.flush_every:
            self.flush()
        return appended

    def flush(self) -> None:
        """Append the buffer to the output file, durably.

        Retries a few times on I/O errors, then keeps the data for the
        next flush; if the buffer outgrows its cap the oldest half is
        dropped with a warning. Never raises.
        """
        self._steps_since_flush = 0
        if not self._buffer:
            return
        payload = "\n".join(self._buffer) + "\n"
        for attempt in range(1, self.config.max_retries + 1):
            try:
                with open(self.config.output_path, "a", encoding="utf-8") as fh:
                    fh.write(payload)
                    fh.flush()
                    os.fsync(fh.fileno())
                self._lines_written += len(self._buffer)
                self._buffer.clear()
                return
            except OSError as exc:
                logger.warning("log flush attempt %d/%d failed: %s",
                               attempt, self.config.max_retries, exc)
                if attempt < self.config.max_retries:
                    time.sleep(self.config.retry_backoff_s * attempt)
        if len(self._buffer) > self.config.max_buffered_lines:
            drop = len(self._buffer) // 2
            del self._buffer[:drop]
            self._lines_dropped += drop
            logger.warning("dropped %d buffered log lines after repeated "
                           "flush failures", drop)

    def close(self) -> None:
        self.flush()

    def __enter__(self) -> "TrainingLogHook":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()


def write_manifest(config: HookConfig, path: str | os.PathLike,
                   checkpoint_steps: Sequence[int] | None = None) -> None:
    """Write the run manifest matching this hook's configuration.

    The file carries the standard manifest fields plus ``logprob_phase``;
    consumers that do not know the extra field ignore it.
    """
    obj = {
        "n_per_question": config.n_per_question,
        "batch_size": config.batch_size,
        "total_steps": config.total_steps,
        "save_every": config.save_every,
        "max_response_len": config.max_response_len,
        "logprob_phase": config.logprob_phase,
    }
    if checkpoint_steps is not None:
        obj["checkpoint_steps"] = [int(s) for s in checkpoint_steps]
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")
