"""Checkpoint selection for RL finetuning runs, straight from training logs.

The toolkit scores saved checkpoints by how well the policy handled the
hardest recent training samples, where hardness is the model's own
uncertainty (average negative log-likelihood of its sampled answers). It
also ships the standard baselines, parameter sweeps, a streaming
best-so-far mode, and a synthetic run generator for comparing strategies
against known ground truth.
"""

from .difficulty import (
    DifficultyMetric,
    MetricKind,
    anll,
    consistency_score,
    consistency_table,
    load_score_table,
    nll,
    sample_difficulty,
)
from .engine import (
    DEFAULT_DELTA_GRID,
    DEFAULT_P_GRID,
    BestChanged,
    RankingReport,
    StreamState,
    SweepReport,
    rank_checkpoints,
    replay_stream,
    stream_finalize,
    stream_update,
    sweep_delta,
    sweep_p,
)
from .records import (
    AggregatedSample,
    AnswerRecord,
    RunManifest,
    SampleAggregator,
    aggregate_samples,
    load_manifest,
    parse_log_stream,
    save_manifest,
    write_log,
)
from .scoring import (
    STRATEGIES,
    CheckpointScore,
    ScoreParams,
    Window,
    extract_window,
    last_checkpoint_score,
    select_top_hard,
    subset_size,
    top_reward_score,
    train_reward_score,
    ugcs_score,
    val_reward_score,
)
from .synth import (
    SyntheticRun,
    SyntheticRunConfig,
    generate_run,
    planted_optimal_p,
    planted_p_config,
    selection_regret,
    simulate_run,
    stationary_config,
)

__version__ = "0.1.0"

__all__ = [
    "AggregatedSample",
    "AnswerRecord",
    "BestChanged",
    "CheckpointScore",
    "DEFAULT_DELTA_GRID",
    "DEFAULT_P_GRID",
    "DifficultyMetric",
    "MetricKind",
    "RankingReport",
    "RunManifest",
    "STRATEGIES",
    "SampleAggregator",
    "ScoreParams",
    "StreamState",
    "SweepReport",
    "SyntheticRun",
    "SyntheticRunConfig",
    "Window",
    "aggregate_samples",
    "anll",
    "consistency_score",
    "consistency_table",
    "extract_window",
    "generate_run",
    "last_checkpoint_score",
    "load_manifest",
    "load_score_table",
    "nll",
    "parse_log_stream",
    "planted_optimal_p",
    "planted_p_config",
    "rank_checkpoints",
    "replay_stream",
    "sample_difficulty",
    "save_manifest",
    "select_top_hard",
    "selection_regret",
    "simulate_run",
    "stationary_config",
    "stream_finalize",
    "stream_update",
    "subset_size",
    "sweep_delta",
    "sweep_p",
    "top_reward_score",
    "train_reward_score",
    "ugcs_score",
    "val_reward_score",
    "write_log",
]
