"""Report emission (CSV and JSON) and table loading.

Reports are byte-deterministic: floats are serialized with Python's
shortest round-trip repr, rows follow canonical orders, and nothing
embeds a timestamp. JSON reports carry a schema_version and the full
effective configuration for provenance.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable, Mapping

from .compare import ComparisonReport
from .engine import RankingReport, SweepReport, P_RECOMMENDATION_HINT
from .errors import SchemaError
from .scoring import CheckpointScore

SCHEMA_VERSION = 1


def _open_w(path):
    return open(path, "w", encoding="utf-8", newline="")


def _write_json(obj: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def _score_obj(score: CheckpointScore) -> dict:
    return {
        "checkpoint_step": score.checkpoint_step,
        "strategy": score.strategy,
        "value": score.value,
        "selected_keys": [[step, sid] for step, sid in score.selected_keys],
    }


def write_scores_csv(scores: Iterable[CheckpointScore], path) -> None:
    with _open_w(path) as fh:
        writer = csv.writer(fh)
        writer.writerow(["checkpoint_step", "strategy", "value"])
        for score in scores:
            writer.writerow([score.checkpoint_step, score.strategy, repr(score.value)])


def write_scores_json(scores: Iterable[CheckpointScore], path,
                      config: Mapping | None = None) -> None:
    _write_json({
        "schema_version": SCHEMA_VERSION,
        "config": dict(config) if config else {},
        "scores": [_score_obj(s) for s in scores],
    }, path)


def write_ranking_json(report: RankingReport, path,
                       config: Mapping | None = None) -> None:
    _write_json({
        "schema_version": SCHEMA_VERSION,
        "config": dict(config) if config else {},
        "strategy": report.strategy,
        "winner": report.winner,
        "winner_value": report.winner_value,
        "tie_policy_applied": report.tie_policy_applied,
        "skipped_checkpoints": list(report.skipped),
        "scores": [_score_obj(s) for s in report.scores],
    }, path)


def write_sweep_csv(report: SweepReport, path) -> None:
    with _open_w(path) as fh:
        writer = csv.writer(fh)
        if report.axis == "p":
            writer.writerow(["p", "winner_step", "winner_value", "calibration"])
            for row in report.rows:
                writer.writerow([row.p, row.winner, repr(row.winner_value),
                                 repr(row.calibration)])
        else:
            writer.writerow(["delta", "winner_step", "winner_value"])
            for row in report.rows:
                writer.writerow([row.delta, row.winner, repr(row.winner_value)])


def write_sweep_json(report: SweepReport, path,
                     config: Mapping | None = None) -> None:
    obj: dict = {
        "schema_version": SCHEMA_VERSION,
        "config": dict(config) if config else {},
        "axis": report.axis,
        "grid": list(report.grid),
    }
    if report.axis == "p":
        obj["recommended_p"] = report.recommended_p
        obj["uncalibrated_defaults"] = dict(P_RECOMMENDATION_HINT)
        obj["rows"] = [
            {"p": r.p, "winner_step": r.winner, "winner_value": r.winner_value,
             "calibration": r.calibration}
            for r in report.rows
        ]
    else:
        obj["winners_agree"] = report.winners_agree
        obj["rows"] = [
            {"delta": r.delta, "winner_step": r.winner, "winner_value": r.winner_value}
            for r in report.rows
        ]
    _write_json(obj, path)


_AXIS_COLUMN = {"strategies": "strategy", "metrics": "metric"}


def write_comparison_csv(report: ComparisonReport, path) -> None:
    with _open_w(path) as fh:
        writer = csv.writer(fh)
        writer.writerow([_AXIS_COLUMN.get(report.axis, report.axis),
                         "mean_regret", "sd_regret", "win_rate", "n_runs"])
        for row in report.rows:
            writer.writerow([row.name, repr(row.mean_regret), repr(row.sd_regret),
                             repr(row.win_rate), row.n_runs])


def write_comparison_json(report: ComparisonReport, path,
                          config: Mapping | None = None) -> None:
    _write_json({
        "schema_version": SCHEMA_VERSION,
        "config": dict(config) if config else {},
        "axis": report.axis,
        "rows": [
            {"name": r.name, "mean_regret": r.mean_regret, "sd_regret": r.sd_regret,
             "win_rate": r.win_rate, "n_runs": r.n_runs}
            for r in report.rows
        ],
        "regrets": {k: list(v) for k, v in report.regrets.items()},
    }, path)


def write_truth_csv(truth: Mapping[int, float], path) -> None:
    with _open_w(path) as fh:
        writer = csv.writer(fh)
        writer.writerow(["checkpoint_step", "true_generalization"])
        for step in sorted(truth):
            writer.writerow([step, repr(truth[step])])


def load_truth_csv(path) -> dict[int, float]:
    return load_calibration_csv(path, value_fields=("true_generalization",))


def load_calibration_csv(path, value_fields: tuple[str, ...] = ("score", "true_generalization")) -> dict[int, float]:
    """Load a per-checkpoint score table: CSV with a ``checkpoint_step``
    column and one of ``value_fields`` (a generator truth file works as a
    calibration table directly)."""
    table: dict[int, float] = {}
    path = Path(path)
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "checkpoint_step" not in reader.fieldnames:
            raise SchemaError(f"{path}: expected a 'checkpoint_step' column")
        field = next((f for f in value_fields if f in reader.fieldnames), None)
        if field is None:
            raise SchemaError(f"{path}: expected one of {value_fields} columns")
        for i, row in enumerate(reader, start=2):
            try:
                step = int(row["checkpoint_step"])
                value = float(row[field])
            except (TypeError, ValueError) as exc:
                raise SchemaError(f"{path}: bad row", i) from exc
            if step in table:
                raise SchemaError(f"{path}: duplicate checkpoint_step {step}", i)
            table[step] = value
    if not table:
        raise SchemaError(f"{path}: no rows")
    return table
