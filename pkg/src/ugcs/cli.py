"""Command-line front door.

Subcommands: score, rank, sweep-p, sweep-delta, watch, simulate, compare.
A JSON config file (--config) supplies defaults; explicit flags win. Exit
codes partition the error classes: 2 schema/validation, 3 empty window or
nothing scorable, 4 missing external table.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
import time
from pathlib import Path

from . import compare as compare_mod
from . import reports
from .difficulty import DifficultyMetric, MetricKind, load_score_table
from .engine import (
    DEFAULT_DELTA_GRID,
    DEFAULT_P_GRID,
    StreamState,
    rank_checkpoints,
    sweep_delta,
    sweep_p,
)
from .errors import (
    ConfigError,
    DuplicateKeyError,
    EmptyInputError,
    EmptyWindowError,
    InvariantError,
    MissingCalibrationError,
    MissingPrecomputedScoreError,
    MissingValidationError,
    NoScorableCheckpointError,
    OutOfOrderStepError,
    SchemaError,
    UgcsError,
)
from .records import aggregate_samples, load_manifest, parse_log_stream, save_manifest, write_log
from .scoring import STRATEGIES, ScoreParams
from .synth import (
    SyntheticRunConfig,
    planted_p_config,
    simulate_run,
    stationary_config,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_SCHEMA = 2
EXIT_EMPTY = 3
EXIT_MISSING_TABLE = 4

_SCHEMA_ERRORS = (SchemaError, InvariantError, DuplicateKeyError,
                  OutOfOrderStepError, ConfigError)
_EMPTY_ERRORS = (EmptyInputError, EmptyWindowError, NoScorableCheckpointError)
_TABLE_ERRORS = (MissingPrecomputedScoreError, MissingCalibrationError,
                 MissingValidationError)

_PRESETS = {
    "default": SyntheticRunConfig,
    "stationary": stationary_config,
    "planted-p": planted_p_config,
}


def _parse_grid(text: str, cast=float) -> tuple:
    """Grid syntax: 'a..b' for an inclusive integer range, else a comma list."""
    text = text.strip()
    if ".." in text:
        lo, hi = text.split("..", 1)
        return tuple(range(int(lo), int(hi) + 1))
    return tuple(cast(part) for part in text.split(",") if part.strip())


def _add_common(parser: argparse.ArgumentParser, *, logs: bool = True) -> None:
    parser.add_argument("--config", help="JSON config file; explicit flags win")
    parser.add_argument("--verbose", action="store_true", default=None,
                        help="log progress to stderr")
    if logs:
        parser.add_argument("--log", action="append",
                            help="training log (newline-delimited JSON); repeatable")
        parser.add_argument("--manifest", help="run manifest JSON")
        parser.add_argument("--val-log", dest="val_log",
                            help="validation log for the val_reward strategy")
        parser.add_argument("--strategy", choices=STRATEGIES)
        parser.add_argument("--p", type=float, help="top-%% of hardest samples")
        parser.add_argument("--delta", type=int, help="training window size in steps")
        parser.add_argument("--difficulty-metric", dest="difficulty_metric",
                            choices=[k.value for k in MetricKind])
        parser.add_argument("--scores-table", dest="scores_table",
                            help="precomputed difficulty table (JSON) for pre_* metrics")
    parser.add_argument("--out-csv", dest="out_csv", help="CSV report path")
    parser.add_argument("--out-json", dest="out_json", help="JSON report path")


_DEFAULTS = {
    "strategy": "ugcs",
    "p": 10.0,
    "delta": 100,
    "difficulty_metric": "anll",
    "poll": 2.0,
    "once": False,
    "verbose": False,
    "runs": 100,
    "seed": 0,
    "axis": "strategies",
    "preset": "default",
    "p_grid": "1..20",
    "delta_grid": "10,20,50,100",
}


def _effective(args: argparse.Namespace) -> dict:
    """Layer option values: built-in defaults < config file < explicit flags."""
    merged = dict(_DEFAULTS)
    if getattr(args, "config", None):
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                file_conf = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise SchemaError(f"config file is not valid JSON: {exc.msg}") from exc
        if not isinstance(file_conf, dict):
            raise SchemaError("config file must hold a JSON object")
        merged.update(file_conf)
    for key, value in vars(args).items():
        if key in ("config", "func") or value is None:
            continue
        merged[key] = value
    return merged


def _score_params(conf: dict) -> ScoreParams:
    return ScoreParams(p=float(conf["p"]), delta=int(conf["delta"]))


def _metric(conf: dict) -> DifficultyMetric:
    kind = MetricKind(conf["difficulty_metric"])
    if kind.is_on_the_fly:
        if conf.get("scores_table"):
            raise ConfigError(f"--scores-table is only for pre_* metrics, not {kind.value}")
        return DifficultyMetric(kind)
    path = conf.get("scores_table")
    if not path:
        raise ConfigError(f"metric {kind.value} requires --scores-table")
    if not Path(path).exists():
        raise MissingPrecomputedScoreError(f"score table not found: {path}")
    return DifficultyMetric.precomputed(kind, load_score_table(path))


def _report_config(conf: dict, keys: tuple[str, ...]) -> dict:
    return {k: conf.get(k) for k in keys if k in conf}


def _load_inputs(conf: dict, *, need_val: bool):
    if not conf.get("log"):
        raise ConfigError("at least one --log is required")
    if not conf.get("manifest"):
        raise ConfigError("--manifest is required")
    if need_val and not conf.get("val_log"):
        raise ConfigError("--val-log is required for the val_reward strategy")
    metric = _metric(conf)  # validate option pairing before any I/O
    manifest = load_manifest(conf["manifest"])
    records = []
    seen: set = set()
    for path in conf["log"]:
        records.extend(parse_log_stream(path, manifest, seen_keys=seen))
    samples = aggregate_samples(records, metric, expected_n=manifest.n_per_question)
    val_samples = None
    if conf.get("val_log"):
        val_records = list(parse_log_stream(conf["val_log"], manifest))
        val_samples = aggregate_samples(val_records, expected_n=manifest.n_per_question)
    return manifest, samples, val_samples


_RUN_KEYS = ("log", "manifest", "val_log", "strategy", "p", "delta",
             "difficulty_metric", "scores_table")


def cmd_score(args: argparse.Namespace) -> int:
    conf = _effective(args)
    params = _score_params(conf)
    manifest, samples, val_samples = _load_inputs(
        conf, need_val=conf["strategy"] == "val_reward")
    report = rank_checkpoints(samples, manifest, conf["strategy"],
                              params, val_samples=val_samples)
    if conf.get("out_csv"):
        reports.write_scores_csv(report.scores, conf["out_csv"])
    if conf.get("out_json"):
        reports.write_scores_json(report.scores, conf["out_json"],
                                  _report_config(conf, _RUN_KEYS))
    for score in report.scores:
        print(f"{score.checkpoint_step}\t{score.strategy}\t{score.value!r}")
    return EXIT_OK


def cmd_rank(args: argparse.Namespace) -> int:
    conf = _effective(args)
    params = _score_params(conf)
    manifest, samples, val_samples = _load_inputs(
        conf, need_val=conf["strategy"] == "val_reward")
    report = rank_checkpoints(samples, manifest, conf["strategy"],
                              params, val_samples=val_samples)
    if conf.get("out_csv"):
        reports.write_scores_csv(report.scores, conf["out_csv"])
    if conf.get("out_json"):
        reports.write_ranking_json(report, conf["out_json"],
                                   _report_config(conf, _RUN_KEYS))
    tie = " (tie, earliest step wins)" if report.tie_policy_applied else ""
    print(f"winner\t{report.winner}\t{report.winner_value!r}{tie}")
    return EXIT_OK


def cmd_sweep_p(args: argparse.Namespace) -> int:
    conf = _effective(args)
    if not conf.get("calibration"):
        raise ConfigError("--calibration table is required for sweep-p")
    if not Path(conf["calibration"]).exists():
        raise MissingCalibrationError(f"calibration table not found: {conf['calibration']}")
    params = _score_params(conf)
    grid = _parse_grid(str(conf["p_grid"]), float)
    manifest, samples, _ = _load_inputs(conf, need_val=False)
    calibration = reports.load_calibration_csv(conf["calibration"])
    report = sweep_p(samples, manifest, grid, calibration, params)
    if conf.get("out_csv"):
        reports.write_sweep_csv(report, conf["out_csv"])
    if conf.get("out_json"):
        reports.write_sweep_json(report, conf["out_json"],
                                 _report_config(conf, _RUN_KEYS + ("p_grid", "calibration")))
    print(f"recommended_p\t{report.recommended_p}")
    return EXIT_OK


def cmd_sweep_delta(args: argparse.Namespace) -> int:
    conf = _effective(args)
    params = _score_params(conf)
    grid = _parse_grid(str(conf["delta_grid"]), int)
    manifest, samples, val_samples = _load_inputs(
        conf, need_val=conf["strategy"] == "val_reward")
    report = sweep_delta(samples, manifest, grid, conf["strategy"],
                         params, val_samples=val_samples)
    if conf.get("out_csv"):
        reports.write_sweep_csv(report, conf["out_csv"])
    if conf.get("out_json"):
        reports.write_sweep_json(report, conf["out_json"],
                                 _report_config(conf, _RUN_KEYS + ("delta_grid",)))
    agree = "yes" if report.winners_agree else "no"
    print(f"winners_agree\t{agree}")
    for row in report.rows:
        print(f"delta\t{row.delta}\t{row.winner}\t{row.winner_value!r}")
    return EXIT_OK


def _iter_watch_files(root: Path):
    if root.is_dir():
        return sorted(p for p in root.iterdir() if p.is_file())
    return [root]


def cmd_watch(args: argparse.Namespace) -> int:
    conf = _effective(args)
    if not conf.get("log"):
        raise ConfigError("--log (file or directory) is required")
    if not conf.get("manifest"):
        raise ConfigError("--manifest is required")
    metric = _metric(conf)
    params = _score_params(conf)
    manifest = load_manifest(conf["manifest"])
    val_samples = None
    if conf.get("val_log"):
        val_samples = aggregate_samples(
            parse_log_stream(conf["val_log"], manifest),
            expected_n=manifest.n_per_question)
    state = StreamState(manifest, conf["strategy"], params,
                        metric=metric, val_samples=val_samples)
    root = Path(conf["log"][0] if isinstance(conf["log"], list) else conf["log"])
    once = bool(conf["once"])
    poll = float(conf["poll"])

    def emit(events):
        for event in events:
            print(json.dumps(event.to_json_obj()), flush=True)

    seen_keys: set = set()
    batch = []
    offsets: dict[Path, int] = {}
    done_files: set[Path] = set()
    while True:
        progressed = False
        for path in _iter_watch_files(root):
            if path in done_files:
                continue
            offset = offsets.get(path, 0)
            with open(path, "rb") as fh:
                fh.seek(offset)
                blob = fh.read()
            # hold back a trailing partial line until it is terminated
            cut = blob.rfind(b"\n") + 1
            if cut:
                progressed = True
                offsets[path] = offset + cut
                for record in parse_log_stream(blob[:cut].splitlines(),
                                               manifest, seen_keys=seen_keys):
                    if batch and record.step != batch[0].step:
                        emit(state.update(batch))
                        batch = []
                    batch.append(record)
            if once:
                done_files.add(path)
        if once and all(p in done_files for p in _iter_watch_files(root)):
            break
        if not once and not progressed:
            time.sleep(poll)
    if batch:
        emit(state.update(batch))
    emit(state.finalize())
    return EXIT_OK


def _synth_config(conf: dict) -> SyntheticRunConfig:
    preset = conf.get("preset", "default")
    if preset not in _PRESETS:
        raise ConfigError(f"unknown preset {preset!r}; expected one of {sorted(_PRESETS)}")
    config = _PRESETS[preset]()
    if conf.get("synth_config"):
        with open(conf["synth_config"], "r", encoding="utf-8") as fh:
            try:
                obj = json.load(fh)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"synth config is not valid JSON: {exc.msg}") from exc
        config = SyntheticRunConfig.from_json_obj({**config.to_json_obj(), **obj})
    if conf.get("seed") is not None:
        config = dataclasses.replace(config, seed=int(conf["seed"]))
    return config


def cmd_simulate(args: argparse.Namespace) -> int:
    conf = _effective(args)
    if not conf.get("out"):
        raise ConfigError("--out directory is required")
    config = _synth_config(conf)
    out = Path(conf["out"])
    out.mkdir(parents=True, exist_ok=True)
    run = simulate_run(config)
    n_lines = write_log(run.records(), out / "log.ndjson")
    write_log(run.val_records(), out / "val_log.ndjson")
    save_manifest(run.manifest, out / "manifest.json")
    reports.write_truth_csv(run.truth, out / "truth.csv")
    with open(out / "config.json", "w", encoding="utf-8") as fh:
        json.dump(config.to_json_obj(), fh, indent=2)
        fh.write("\n")
    print(f"wrote\t{out}\t{n_lines} log lines, {len(run.truth)} checkpoints")
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    conf = _effective(args)
    config = _synth_config(conf)
    params = _score_params(conf)
    n_runs = int(conf["runs"])
    if conf["axis"] == "metrics":
        report = compare_mod.compare_metrics(config, n_runs, params)
    else:
        report = compare_mod.compare_strategies(config, n_runs, params)
    if conf.get("out_csv"):
        reports.write_comparison_csv(report, conf["out_csv"])
    if conf.get("out_json"):
        keys = ("axis", "runs", "seed", "preset", "p", "delta", "synth_config")
        reports.write_comparison_json(report, conf["out_json"],
                                      {k: conf.get(k) for k in keys})
    name_w = max(len(r.name) for r in report.rows)
    print(f"{'name'.ljust(name_w)}\tmean_regret\tsd_regret\twin_rate\tn")
    for row in report.rows:
        print(f"{row.name.ljust(name_w)}\t{row.mean_regret:.6f}\t"
              f"{row.sd_regret:.6f}\t{row.win_rate:.3f}\t{row.n_runs}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ugcs",
        description="Score and rank RL-finetuning checkpoints from training logs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_score = sub.add_parser("score", help="per-checkpoint scores for one strategy")
    _add_common(p_score)
    p_score.set_defaults(func=cmd_score)

    p_rank = sub.add_parser("rank", help="scores plus the winning checkpoint")
    _add_common(p_rank)
    p_rank.set_defaults(func=cmd_rank)

    p_sp = sub.add_parser("sweep-p", help="sweep the top-p%% grid against a calibration table")
    _add_common(p_sp)
    p_sp.add_argument("--p-grid", dest="p_grid", help="e.g. '1..20' or '1,2,5,10'")
    p_sp.add_argument("--calibration", help="CSV checkpoint_step,score")
    p_sp.set_defaults(func=cmd_sweep_p)

    p_sd = sub.add_parser("sweep-delta", help="sweep the training-window size")
    _add_common(p_sd)
    p_sd.add_argument("--delta-grid", dest="delta_grid", help="e.g. '10,20,50,100'")
    p_sd.set_defaults(func=cmd_sweep_delta)

    p_watch = sub.add_parser("watch", help="stream a growing log, emit best-changed events")
    _add_common(p_watch)
    p_watch.add_argument("--poll", type=float, help="poll interval in seconds")
    p_watch.add_argument("--once", action="store_true", default=None,
                         help="replay existing content and exit")
    p_watch.set_defaults(func=cmd_watch)

    p_sim = sub.add_parser("simulate", help="generate a synthetic training run")
    _add_common(p_sim, logs=False)
    p_sim.add_argument("--out", help="output directory")
    p_sim.add_argument("--seed", type=int)
    p_sim.add_argument("--preset", choices=sorted(_PRESETS))
    p_sim.add_argument("--synth-config", dest="synth_config",
                       help="JSON overrides for the generator config")
    p_sim.set_defaults(func=cmd_simulate)

    p_cmp = sub.add_parser("compare", help="Monte-Carlo strategy or metric comparison")
    _add_common(p_cmp, logs=False)
    p_cmp.add_argument("--axis", choices=("strategies", "metrics"))
    p_cmp.add_argument("--runs", type=int)
    p_cmp.add_argument("--seed", type=int)
    p_cmp.add_argument("--p", type=float)
    p_cmp.add_argument("--delta", type=int)
    p_cmp.add_argument("--preset", choices=sorted(_PRESETS))
    p_cmp.add_argument("--synth-config", dest="synth_config")
    p_cmp.set_defaults(func=cmd_compare)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.INFO if getattr(args, "verbose", None) else logging.WARNING
    logging.basicConfig(stream=sys.stderr, level=level,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except _TABLE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING_TABLE
    except _EMPTY_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EMPTY
    except _SCHEMA_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except UgcsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA


if __name__ == "__main__":
    sys.exit(main())
