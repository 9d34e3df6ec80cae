"""
Exception hierarchy for the teeth restoration pipeline.

Every error raised on purpose by the project derives from HDTRError, so the
CLI can turn it into a single machine-parsable line. Errors that describe a
bad argument also derive from ValueError.
"""

from typing import Optional, Sequence


class HDTRError(Exception):
    """Base class for all pipeline errors."""


class ConfigurationError(HDTRError, ValueError):
    """Invalid configuration value or missing component."""


class GeometryError(HDTRError, ValueError):
    """Invalid landmarks or a degenerate crop / polygon."""


class ShapeError(HDTRError, ValueError):
    """Array or tensor shape does not match what an operation expects."""


class MetricError(HDTRError, ValueError):
    """Image unusable for a sharpness metric, or nothing to score."""


class DatasetError(HDTRError):
    """Frame store or frame directory cannot be used."""


class BenchmarkError(HDTRError, ValueError):
    """Invalid benchmark parameters."""


class UsageError(HDTRError, ValueError):
    """Missing or malformed command-line argument."""


class CheckpointError(HDTRError):
    """Checkpoint cannot be read."""


class CheckpointVersionError(CheckpointError):
    """Checkpoint magic string does not match the supported format."""


class CheckpointCorruptError(CheckpointError):
    """Checkpoint file is truncated or otherwise unreadable."""


class NonFiniteLossError(HDTRError):
    """
    A training loss became NaN or Inf.

    Attributes:
        step: Training step at which the loss was observed.
        loss_name: Which loss was non-finite.
        batch_indices: Positions in the batch whose samples produced
                       non-finite values (empty if not attributable).
        dump_path: Where the offending batch was saved, if anywhere.
    """

    def __init__(
        self,
        step: int,
        loss_name: str,
        batch_indices: Sequence[int],
        dump_path: Optional[str] = None,
    ):
        self.step = step
        self.loss_name = loss_name
        self.batch_indices = list(batch_indices)
        self.dump_path = dump_path
        message = (
            f"non-finite {loss_name} at step {step}; "
            f"offending batch indices {self.batch_indices}"
        )
        if dump_path:
            message += f"; batch dumped to {dump_path}"
        super().__init__(message)
