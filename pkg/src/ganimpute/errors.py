"""Exception types shared across the package.

The CLI maps these onto process exit codes: configuration problems exit 2,
data problems exit 3, diverged training exits 4.
"""

from __future__ import annotations


class GanImputeError(Exception):
    """Base class for package-specific errors."""


class ConfigError(GanImputeError):
    """Invalid configuration: schema violations, unknown keys, bad values."""


class DataError(GanImputeError):
    """Invalid or inconsistent data: shape mismatches, unreadable files."""


class TrainingDivergedError(GanImputeError):
    """A loss became non-finite during training.

    Carries the epoch and minibatch index where the divergence was detected.
    """

    def __init__(self, message: str, epoch: int, batch: int) -> None:
        super().__init__(message)
        self.epoch = epoch
        self.batch = batch

    def __reduce__(self):
        # Keep epoch/batch through pickling (e.g. across worker processes).
        message = self.args[0] if self.args else ""
        return (type(self), (message, self.epoch, self.batch))
