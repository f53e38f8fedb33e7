#!/usr/bin/env python3
"""Wiring the hook into a (mock) GRPO-style training loop.

Real glue looks the same: after each optimizer step you already hold, per
question, the N sampled answers with their rewards and token
log-probabilities — hand them to ``on_step`` and move on. Swap the mock
generator for tensors-turned-lists from your trainer.
"""

import random
import tempfile
from pathlib import Path

from ugcs_hook import HookConfig, TrainingLogHook, write_manifest

out = Path(tempfile.mkdtemp(prefix="ugcs_hook_demo_"))
config = HookConfig(
    output_path=out / "log.ndjson",
    flush_every=10,
    evidence_mode="token_logprobs",
    n_per_question=4,
    batch_size=4,
    total_steps=50,
    save_every=25,
)

rng = random.Random(0)
with TrainingLogHook(config) as hook:
    for step in range(1, config.total_steps + 1):
        # ... forward passes, reward computation, optimizer.step() ...
        batch = []
        for q in rng.sample(range(200), config.batch_size):
            answers = []
            for _ in range(config.n_per_question):
                n_tokens = rng.randint(4, 24)
                answers.append({
                    "reward": float(rng.random() < 0.5),
                    "token_logprobs": [-rng.random() * 2 for _ in range(n_tokens)],
                })
            batch.append((f"q{q}", answers))
        hook.on_step(step, batch)

write_manifest(config, out / "manifest.json")
print(f"wrote {hook.lines_written} lines to {out}")
print("score it with:  ugcs rank --log", out / "log.ndjson",
      "--manifest", out / "manifest.json", "--delta 25")
