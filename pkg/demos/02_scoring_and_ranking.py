#!/usr/bin/env python3
"""Score checkpoints with every strategy and rank them.

Generates a synthetic run (so there is a known ground truth), then walks
through window extraction, hardest-sample selection, and the five scoring
strategies.
"""

from ugcs import (
    ScoreParams,
    SyntheticRunConfig,
    extract_window,
    rank_checkpoints,
    select_top_hard,
    simulate_run,
    ugcs_score,
)

config = SyntheticRunConfig(seed=11, total_steps=300, save_every=100,
                            n_questions=400, eval_pool_size=128)
run = simulate_run(config)
samples = run.aggregates()
print(f"run: {config.total_steps} steps, checkpoints at "
      f"{list(run.manifest.checkpoint_steps)}")

# one window up close
window = extract_window(samples, checkpoint_step=300, delta=100)
print(f"\nwindow for checkpoint 300: {len(window)} samples "
      f"(steps {window.samples[0].step}..{window.samples[-1].step})")
hardest = select_top_hard(window, p=10)
print(f"top-10% hardest subset: {len(hardest)} samples, e.g. {hardest[:3]}")
score = ugcs_score(window, p=10)
print(f"mean reward on that subset = {score.value:.4f}")

# all five strategies, ranked
print("\nstrategy rankings (winner per strategy):")
params = ScoreParams(p=10, delta=100)
for strategy in ("ugcs", "train_reward", "top_reward", "val_reward", "last_checkpoint"):
    val = run.val_aggregates() if strategy == "val_reward" else None
    report = rank_checkpoints(samples, run.manifest, strategy, params,
                              val_samples=val)
    truth = run.truth[report.winner]
    print(f"  {strategy:15s} -> checkpoint {report.winner} "
          f"(score {report.winner_value:.4f}, true generalization {truth:.4f})")

best = max(run.truth, key=run.truth.get)
print(f"\nground-truth best checkpoint: {best} "
      f"(true generalization {run.truth[best]:.4f})")
