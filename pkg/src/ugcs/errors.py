"""Exception taxonomy for the checkpoint-selection toolkit.

Errors fall into three families, which the CLI maps onto exit codes:
schema/validation problems (exit 2), empty or unscorable inputs (exit 3),
and missing external tables (exit 4).
"""

from __future__ import annotations


class UgcsError(Exception):
    """Base class for all toolkit errors."""


class LineError(UgcsError):
    """Error tied to a specific line of a log file."""

    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        super().__init__(message)

    def __str__(self) -> str:
        msg = super().__str__()
        if self.line_no is not None:
            return f"line {self.line_no}: {msg}"
        return msg


class SchemaError(LineError):
    """A log line or document is missing a field or has an ill-typed value."""


class InvariantError(LineError):
    """A structurally valid record violates a domain invariant."""


class DuplicateKeyError(LineError):
    """The same (step, sample_id, answer_index) appeared twice in one stream."""


class EmptyInputError(UgcsError):
    """An operation that needs at least one record received none."""


class TooFewGenerationsError(UgcsError):
    """Consistency scoring needs at least two correctness bits."""


class MissingPrecomputedScoreError(UgcsError):
    """A precomputed difficulty table has no entry for an encountered sample."""


class EmptyWindowError(UgcsError):
    """No aggregated samples fall inside a checkpoint's training window."""


class MissingValidationError(UgcsError):
    """The validation log has no records for the requested checkpoint step."""


class NoScorableCheckpointError(UgcsError):
    """Every checkpoint in the manifest had an empty window."""


class MissingCalibrationError(UgcsError):
    """The calibration table has no score for a winning checkpoint."""


class OutOfOrderStepError(UgcsError):
    """Stream mode received records for a step earlier than one already seen."""


class ConfigError(UgcsError):
    """Invalid configuration or parameter combination."""
