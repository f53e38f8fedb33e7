"""Shared fixture builders and independent reference implementations.

The reference functions here are deliberately written against the raw
record structure with plain sum()/sorted() so they share no code path
with the library they check.
"""

from __future__ import annotations

import math
import random
import re

from ugcs import AnswerRecord, RunManifest

# -- fixture builders --------------------------------------------------------


def make_record(step=1, sample_id="q0", answer_index=0, reward=1.0,
                token_logprobs=None, sum_logprob=None, num_tokens=None):
    if token_logprobs is None and sum_logprob is None:
        token_logprobs = [-1.0, -1.0]
    if token_logprobs is not None:
        token_logprobs = tuple(float(v) for v in token_logprobs)
        num_tokens = num_tokens if num_tokens is not None else len(token_logprobs)
    return AnswerRecord(
        step=step, sample_id=sample_id, answer_index=answer_index,
        reward=reward, num_tokens=num_tokens if num_tokens is not None else 1,
        token_logprobs=token_logprobs, sum_logprob=sum_logprob,
    )


def random_fixture(seed, total_steps=120, batch_size=4, n_per_question=4,
                   pool_size=None, save_every=None, max_tokens=6):
    """A randomized training log: (records, manifest).

    Questions are drawn from a finite pool so the same sample_id recurs at
    several steps (multi-epoch). Roughly half the records carry token-level
    evidence, the rest carry the equivalent sum.
    """
    rng = random.Random(seed)
    pool_size = pool_size or max(8, 3 * batch_size)
    save_every = save_every or max(1, total_steps // 5)
    records = []
    for step in range(1, total_steps + 1):
        for sid in rng.sample(range(pool_size), batch_size):
            for i in range(n_per_question):
                t = rng.randint(1, max_tokens)
                logps = [-rng.random() * 3.0 for _ in range(t)]
                reward = float(rng.random() < 0.5) if rng.random() < 0.7 else rng.random()
                if rng.random() < 0.5:
                    records.append(make_record(step, f"s{sid}", i, reward,
                                               token_logprobs=logps))
                else:
                    records.append(make_record(step, f"s{sid}", i, reward,
                                               sum_logprob=sum(logps), num_tokens=t))
    manifest = RunManifest(
        n_per_question=n_per_question, batch_size=batch_size,
        total_steps=total_steps, save_every=save_every, max_response_len=max_tokens,
    )
    return records, manifest


def random_val_records(seed, manifest, n_val=6):
    """A validation log: n_val held-out questions, N completions per
    checkpoint step."""
    rng = random.Random(seed)
    records = []
    for step in manifest.checkpoint_steps:
        for j in range(n_val):
            for i in range(manifest.n_per_question):
                t = rng.randint(1, 6)
                records.append(make_record(
                    step, f"v{j}", i, float(rng.random() < 0.5),
                    sum_logprob=-rng.random() * 3.0 * t, num_tokens=t,
                ))
    return records


# -- independent references ---------------------------------------------------


def ref_total_logprob(record):
    if record.token_logprobs is not None:
        return sum(record.token_logprobs)
    return record.sum_logprob


def ref_group_stats(records):
    """Group-by-then-mean oracle: key -> (mean_reward, mean_anll)."""
    groups = {}
    for r in records:
        groups.setdefault((r.step, r.sample_id), []).append(r)
    out = {}
    for key, recs in groups.items():
        rewards = [r.reward for r in recs]
        anlls = [-ref_total_logprob(r) / r.num_tokens for r in recs]
        out[key] = (sum(rewards) / len(rewards), sum(anlls) / len(anlls))
    return out


def ref_window_keys(records, checkpoint_step, delta):
    """Brute-force membership oracle for the half-open training window."""
    lo = max(1, checkpoint_step - delta)
    return {(r.step, r.sample_id) for r in records if lo <= r.step < checkpoint_step}


def ref_ugcs_score(records, checkpoint_step, delta, p):
    """Full reference pipeline: group-by, mean, full sort, ceil-k, mean.

    Returns None when the window is empty.
    """
    lo = max(1, checkpoint_step - delta)
    in_window = [r for r in records if lo <= r.step < checkpoint_step]
    if not in_window:
        return None
    stats = ref_group_stats(in_window)
    m = len(stats)
    k = max(1, math.ceil(p * m / 100.0))
    ranked = sorted(stats.items(), key=lambda kv: (-kv[1][1], kv[0]))
    chosen = ranked[:k]
    return sum(v[0] for _, v in chosen) / k


def ref_train_reward(records, checkpoint_step, delta):
    lo = max(1, checkpoint_step - delta)
    in_window = [r for r in records if lo <= r.step < checkpoint_step]
    if not in_window:
        return None
    stats = ref_group_stats(in_window)
    return sum(v[0] for v in stats.values()) / len(stats)


def rel_err(a, b):
    scale = max(abs(a), abs(b), 1.0)
    return abs(a - b) / scale


# -- acceptance reporting -----------------------------------------------------

_CRITERION_RE = re.compile(r"test_a(\d+)\w*")


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    m = _CRITERION_RE.search(report.nodeid)
    if not m:
        return
    verdict = "PASS" if report.passed else "FAIL"
    print(f"\nACCEPTANCE A{int(m.group(1))}: {verdict}", flush=True)
