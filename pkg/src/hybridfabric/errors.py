"""Exception hierarchy shared across the fabric."""

from __future__ import annotations


class FabricError(Exception):
    """Base class for every error raised by this package."""


class InvalidToken(FabricError, ValueError):
    pass


class MalformedKey(FabricError, ValueError):
    pass


class MalformedPattern(FabricError, ValueError):
    pass


class DuplicateRegistration(FabricError, KeyError):
    def __str__(self) -> str:
        return f"serde already registered for {self.args[0]!r}"


class RegistryFrozen(FabricError, RuntimeError):
    pass


class QueueFull(FabricError):
    """Raised when a bounded queue with the ``reject`` policy is at capacity."""

    def __init__(self, message: str = "queue is full", summary=None):
        super().__init__(message)
        self.summary = summary


class QueueClosed(FabricError):
    pass


class UnknownHandle(FabricError, KeyError):
    pass


class NotConnected(FabricError, RuntimeError):
    pass


class SerializationFailed(FabricError):
    pass


class RequestTimeout(FabricError, TimeoutError):
    pass


class ReplyRejected(FabricError):
    def __init__(self, reason, detail: str = ""):
        super().__init__(f"reply rejected: {reason}" + (f" ({detail})" if detail else ""))
        self.reason = reason
        self.detail = detail


class DrainTimeout(FabricError, TimeoutError):
    """Drain exceeded its deadline; ``report`` holds the partial stop report."""

    def __init__(self, report):
        super().__init__(f"drain deadline exceeded: {report}")
        self.report = report


class AlreadyStarted(FabricError, RuntimeError):
    pass


class SetupFailed(FabricError, RuntimeError):
    def __init__(self, path: str, detail: str = ""):
        super().__init__(f"setup failed for path {path!r}" + (f": {detail}" if detail else ""))
        self.path = path


class InvariantViolation(FabricError, AssertionError):
    pass


class EmptySamples(FabricError, ValueError):
    pass


class ValidationFailed(FabricError, ValueError):
    pass
