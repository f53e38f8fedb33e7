#!/usr/bin/env python3
"""Best-so-far selection while training is still running.

Feeds a run step by step through StreamState. The buffer only ever holds
the last delta steps, each checkpoint is scored the moment the stream
passes it, and the final best matches the offline ranking exactly.
"""

from ugcs import (
    ScoreParams,
    SyntheticRunConfig,
    StreamState,
    rank_checkpoints,
    simulate_run,
)

config = SyntheticRunConfig(seed=23, total_steps=400, save_every=50,
                            n_questions=400, eval_pool_size=128)
run = simulate_run(config)
params = ScoreParams(p=10, delta=50)

state = StreamState(run.manifest, "ugcs", params)
by_step: dict[int, list] = {}
for record in run.records():
    by_step.setdefault(record.step, []).append(record)

print("streaming; each best_changed event would trigger a checkpoint save:")
for step in sorted(by_step):
    for event in state.update(by_step[step]):
        print(f"  step {event.step}: new best, score {event.value:.4f} "
              f"(buffer holds steps {state.buffered_steps()[0]}.."
              f"{state.buffered_steps()[-1]})")
for event in state.finalize():
    print(f"  step {event.step}: new best at end of log, score {event.value:.4f}")

offline = rank_checkpoints(run.aggregates(), run.manifest, "ugcs", params)
assert state.best is not None and state.best[0] == offline.winner
print(f"\nfinal streaming best = {state.best[0]} "
      f"== offline winner = {offline.winner}")
print(f"its true generalization: {run.truth[state.best[0]]:.4f} "
      f"(best possible {max(run.truth.values()):.4f})")
