"""Drop-in logging hook emitting the checkpoint-selection training-log schema."""

from .hook import (
    EVIDENCE_MODES,
    LOGPROB_PHASES,
    HookConfig,
    TrainingLogHook,
    write_manifest,
)

__version__ = "0.1.0"

__all__ = [
    "EVIDENCE_MODES",
    "HookConfig",
    "LOGPROB_PHASES",
    "TrainingLogHook",
    "write_manifest",
]
