"""Transport adapter interface and the wire envelope."""

from __future__ import annotations

import abc
import queue
import time
import uuid
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field

from ..errors import RequestTimeout

INBOX_PREFIX = "_INBOX"


@dataclass(frozen=True)
class WireEnvelope:
    subject: str
    headers: Mapping[str, str] = field(default_factory=dict)
    body: bytes = b""
    reply: str | None = None


Sink = Callable[[WireEnvelope], None]


@dataclass
class DrainResult:
    delivered: int = 0
    discarded: int = 0
    timed_out: bool = False


class TransportAdapter(abc.ABC):
    """Subject-based transport used by the distributed context.

    Sinks are invoked on the transport's delivery context, one envelope at
    a time per subscription, in arrival order.
    """

    @abc.abstractmethod
    def connect(self) -> None: ...

    @property
    @abc.abstractmethod
    def is_connected(self) -> bool: ...

    @abc.abstractmethod
    def publish(self, subject: str, headers: Mapping[str, str], body: bytes, reply: str | None = None) -> None: ...

    @abc.abstractmethod
    def subscribe(self, pattern: str, sink: Sink) -> object:
        """Return an opaque subscription token."""

    @abc.abstractmethod
    def unsubscribe(self, token: object) -> int:
        """Drop the subscription immediately; return the number of discarded pending envelopes."""

    @abc.abstractmethod
    def drain(self, token: object, timeout: float) -> DrainResult:
        """Stop new arrivals, deliver what was already received, then unsubscribe."""

    @abc.abstractmethod
    def flush(self, timeout: float = 5.0) -> None: ...

    @abc.abstractmethod
    def close(self) -> None: ...

    def on_delivery_context(self) -> bool:
        """True when called from a thread that runs sinks for this transport."""
        return False

    def new_inbox(self) -> str:
        return f"{INBOX_PREFIX}.{uuid.uuid4().hex}"

    def request(
        self, subject: str, headers: Mapping[str, str], body: bytes, timeout: float
    ) -> WireEnvelope:
        """Publish with a fresh reply subject and wait for the first reply."""
        if self.on_delivery_context():
            raise RuntimeError("request() would deadlock when called from a subscription callback")
        inbox = self.new_inbox()
        replies: queue.SimpleQueue[WireEnvelope] = queue.SimpleQueue()
        token = self.subscribe(inbox, replies.put)
        try:
            self.publish(subject, headers, body, reply=inbox)
            deadline = time.monotonic() + timeout
            while True:
                try:
                    env = replies.get(timeout=max(0.0, deadline - time.monotonic()))
                except queue.Empty:
                    raise RequestTimeout(f"no reply on {subject!r} within {timeout}s") from None
                # NATS answers "no responders" with an empty 503 status message; keep waiting
                if not env.body and env.headers.get("Status") == "503":
                    continue
                return env
        finally:
            self.unsubscribe(token)
