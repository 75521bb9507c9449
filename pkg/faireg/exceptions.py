"""Exceptions for the faireg package."""

from typing import Optional


class FairRegError(Exception):
    """Base exception for all toolkit errors.

    ``stage`` is filled in by the experiment pipeline when an error escapes one
    of its stages, so the same exception object reaches the caller with context.
    """

    def __init__(self, message: str = "", stage: Optional[str] = None):
        super().__init__(message)
        self.message = message
        self.stage = stage

    def __str__(self) -> str:
        if self.stage:
            return f"[{self.stage}] {self.message}"
        return self.message


class DataError(FairRegError):
    """Raised when input data cannot be parsed or has inconsistent shapes."""

    def __init__(self, message: str, row: Optional[int] = None, column: Optional[str] = None):
        location = []
        if row is not None:
            location.append(f"row {row}")
        if column is not None:
            location.append(f"column '{column}'")
        if location:
            message = f"{message} (at {', '.join(location)})"
        super().__init__(message)
        self.row = row
        self.column = column


class CategoryError(DataError):
    """Raised for empty, undersized or unseen protected-attribute categories."""
    pass


class ConfigError(FairRegError):
    """Raised for invalid experiment configuration or runtime settings."""
    pass


class NumericError(FairRegError):
    """Raised when a numerical routine cannot produce a finite, reliable result."""

    def __init__(self, message: str, epoch: Optional[int] = None):
        if epoch is not None:
            message = f"{message} (epoch {epoch})"
        super().__init__(message)
        self.epoch = epoch


class StorageError(FairRegError):
    """Raised when an artifact cannot be written or read back."""
    pass
