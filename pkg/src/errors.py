"""
Exception types shared by the pipeline stages.

Validation problems derive from ``ValueError`` and runtime failures from
``RuntimeError`` so callers that only know the builtin types keep working.
"""

from typing import Optional


class GcnnError(Exception):
    """Marker base for every error raised by this package."""


class ConfigurationError(GcnnError, ValueError):
    """Invalid parameter combination or configuration value."""


class SignalTooShortError(GcnnError, ValueError):
    """Input signal is shorter than the operation requires."""


class DomainError(GcnnError, ValueError):
    """Input outside the mathematical domain of an operation."""


class DegenerateChannelError(GcnnError, ValueError):
    """A channel carries no variance in any trial."""

    def __init__(self, channel: int, message: Optional[str] = None) -> None:
        self.channel = channel
        super().__init__(message or f"Channel {channel} has zero variance in every trial")


class ValidationError(GcnnError, ValueError):
    """Structural invariant of an input object is violated."""


class ShapeError(GcnnError, ValueError):
    """Array dimensions do not match."""


class OracleScopeError(GcnnError, ValueError):
    """Dense verification oracle called on a problem that is too large."""


class NetworkSpecError(GcnnError, ValueError):
    """Malformed network layer string."""

    def __init__(self, position: int, token: str, reason: str) -> None:
        self.position = position
        self.token = token
        super().__init__(f"Invalid layer token {token!r} at position {position}: {reason}")


class RecordingLoadError(GcnnError, ValueError):
    """Recording container could not be read or failed validation."""


class NumericError(GcnnError, RuntimeError):
    """Non-finite values appeared in parameters or gradients."""


class UsageError(GcnnError, RuntimeError):
    """API used out of order, e.g. backward before forward."""


class StageError(GcnnError, RuntimeError):
    """Failure of one pipeline stage, labelled with the stage name."""

    def __init__(self, stage: str, cause: BaseException) -> None:
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {cause}")
