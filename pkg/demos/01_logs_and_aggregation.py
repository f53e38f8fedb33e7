#!/usr/bin/env python3
"""Training logs in, per-sample aggregates out.

Builds a tiny log by hand, shows what the parser accepts and rejects, and
how answers collapse into per-(step, question) aggregates.
"""

import io
import json

from ugcs import aggregate_samples, anll, parse_log_stream
from ugcs.errors import InvariantError

lines = []
# question "q1" at step 1: two answers, one right and one wrong, with
# token-level evidence
lines.append({"step": 1, "sample_id": "q1", "answer_index": 0, "reward": 1.0,
              "num_tokens": 3, "token_logprobs": [-0.2, -0.1, -0.3]})
lines.append({"step": 1, "sample_id": "q1", "answer_index": 1, "reward": 0.0,
              "num_tokens": 2, "token_logprobs": [-2.0, -4.0]})
# question "q2": same information carried as a single summed log-prob
lines.append({"step": 1, "sample_id": "q2", "answer_index": 0, "reward": 0.0,
              "num_tokens": 8, "sum_logprob": -12.0})

stream = io.StringIO("\n".join(json.dumps(obj) for obj in lines))
records = list(parse_log_stream(stream))
print(f"parsed {len(records)} records")
for rec in records:
    print(f"  {rec.sample_id} answer {rec.answer_index}: reward {rec.reward}, "
          f"per-token uncertainty {anll(rec):.3f}")

print("\nper-sample aggregates (mean reward, mean uncertainty over answers):")
for key, agg in aggregate_samples(records).items():
    print(f"  {key}: reward {agg.mean_reward:.2f}, anll {agg.mean_anll:.3f}, "
          f"n={agg.n_answers}")

# the parser holds the line on invariants: a "probability" above 1 is a
# corrupt log, not a soft warning
bad = {"step": 2, "sample_id": "q1", "answer_index": 0, "reward": 1.0,
       "num_tokens": 1, "token_logprobs": [0.5]}
try:
    list(parse_log_stream(io.StringIO(json.dumps(bad))))
except InvariantError as exc:
    print(f"\nrejected bad line as expected: {exc}")
