#!/usr/bin/env python3
"""Adaptive vs precomputed difficulty estimation.

Same hardest-sample scoring, five ways of deciding what "hardest" means:
uncertainty recomputed from each window (anll, nll) versus static tables
measured once before training (pre_anll, pre_nll, pre_consistency).
A question that was hard for the initial model may be learned — or
memorized — by step 800; static tables keep selecting it anyway.
"""

import time

from ugcs import ScoreParams, SyntheticRunConfig
from ugcs.compare import compare_metrics

t0 = time.time()
report = compare_metrics(
    SyntheticRunConfig(seed=0),
    n_runs=60,  # acceptance uses 300
    params=ScoreParams(p=10, delta=100),
)
print(f"{'difficulty metric':18s} {'mean regret':>12s} {'win rate':>9s}")
for row in sorted(report.rows, key=lambda r: r.mean_regret):
    tag = "adaptive" if row.name in ("anll", "nll") else "static"
    print(f"{row.name:18s} {row.mean_regret:12.4f} {row.win_rate:9.2f}   ({tag})")
print(f"\n{report.rows[0].n_runs} seeded runs in {time.time() - t0:.1f}s")
