"""Distributed context: typed events over a subject-based transport.

Publication resolves the family serde from the event's base key, validates,
serializes and sends the body with identity headers.  Consumption rebuilds
the key from the headers, deserializes, validates again and hands a local
:class:`~hybridfabric.keys.Event` to the sink; anything that cannot be
rebuilt becomes a :class:`RejectionRecord` and a warning.
"""

from __future__ import annotations

import enum
import itertools
import logging
import threading
import time
from collections import Counter, deque
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field
from typing import Any

from .errors import (
    DrainTimeout,
    MalformedKey,
    NotConnected,
    ReplyRejected,
    SerializationFailed,
    UnknownHandle,
    ValidationFailed,
)
from .keys import Event, parse_key
from .matcher import compile_pattern
from .serde import SerDeRegistry, validate
from .transport.base import TransportAdapter, WireEnvelope

logger = logging.getLogger(__name__)

HEADER_PREFIX = "CNS-"
FULL_KEY = "CNS-Full-Key"
BASE_KEY = "CNS-Base-Key"
QUALIFIERS_KEY = "CNS-Qualifiers-Key"
PUBLISHED_AT = "CNS-Published-At"
CLIENT_ID = "CNS-Client-Id"
REQUIRED_HEADERS = (FULL_KEY, BASE_KEY, QUALIFIERS_KEY, PUBLISHED_AT, CLIENT_ID)
SUBJECT_META = "transport.subject"

DEFAULT_DRAIN_DEADLINE = 5.0


class RejectReason(str, enum.Enum):
    MISSING_HEADER = "missing-header"
    DESERIALIZE_FAILED = "deserialize-failed"
    VALIDATION_FAILED = "validation-failed"
    MALFORMED_KEY = "malformed-key"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class RejectionRecord:
    subject: str
    reason: RejectReason
    detail: str = ""
    timestamp: int = 0


@dataclass(frozen=True)
class PublishResult:
    published: bool
    reason: RejectReason | None = None
    detail: str = ""

    def __bool__(self) -> bool:
        return self.published


@dataclass
class DistributedStopReport:
    subscriptions: int = 0
    drained: int = 0
    delivered_during_drain: int = 0
    discarded: int = 0
    clean: bool = True
    noop: bool = False
    elapsed: float = 0.0


@dataclass(eq=False)
class DistributedSubscription:
    pattern: str
    token: object = None
    received: int = 0
    delivered: int = 0
    rejected: int = 0


@dataclass
class DistributedStats:
    published: int = 0
    publish_rejected: int = 0
    publish_validations: int = 0
    received: int = 0
    delivered: int = 0
    rejected: int = 0
    consume_validations: int = 0
    sink_errors: int = 0
    responder_errors: int = 0
    replies_sent: int = 0
    replies_rejected: int = 0
    rejections_by_reason: Counter = field(default_factory=Counter)


class DistributedContext:
    def __init__(
        self,
        transport: TransportAdapter,
        registry: SerDeRegistry | None = None,
        client_id: str = "hybridfabric",
        *,
        validate: bool = True,
        drain_deadline: float = DEFAULT_DRAIN_DEADLINE,
        clock: Callable[[], int] = time.time_ns,
        rejection_log_size: int = 1000,
    ):
        if drain_deadline <= 0:
            raise ValueError("drain_deadline must be positive")
        self.transport = transport
        self.registry = registry if registry is not None else SerDeRegistry()
        self.client_id = client_id
        self.validate = validate
        self.drain_deadline = drain_deadline
        self.clock = clock
        self.stats = DistributedStats()
        self.rejections: deque[RejectionRecord] = deque(maxlen=rejection_log_size)
        self._subs: dict[int, DistributedSubscription] = {}
        self._ids = itertools.count(1)
        self._lock = threading.Lock()
        self._stopped = False

    # -- lifecycle -----------------------------------------------------
    def connect(self) -> DistributedContext:
        self.transport.connect()
        return self

    @property
    def is_connected(self) -> bool:
        return not self._stopped and self.transport.is_connected

    def _require(self) -> None:
        if not self.is_connected:
            raise NotConnected("distributed context is not connected")

    def __enter__(self) -> DistributedContext:
        if not self.transport.is_connected:
            self.connect()
        return self

    def __exit__(self, *exc) -> None:
        try:
            self.stop()
        except DrainTimeout:
            logger.warning("drain deadline exceeded while leaving context")

    # -- publication ---------------------------------------------------
    def encode(self, event: Event, subject: str | None = None) -> WireEnvelope | RejectionRecord:
        """Validate and serialize ``event`` into an envelope without sending it."""
        serde = self.registry.resolve(event.key)
        if self.validate and serde.validator is not None:
            self.stats.publish_validations += 1
            verdict = validate(serde, event.payload)
            if not verdict:
                return RejectionRecord(
                    subject or event.key.full_key, RejectReason.VALIDATION_FAILED, verdict.reason, self.clock()
                )
        try:
            body = serde.serialize(event.payload)
        except Exception as exc:
            raise SerializationFailed(f"{event.key}: {type(exc).__name__}: {exc}") from exc
        key = event.key
        headers = {HEADER_PREFIX + k: v for k, v in event.metadata.items()}
        headers[FULL_KEY] = key.full_key
        headers[BASE_KEY] = key.base_key
        headers[QUALIFIERS_KEY] = key.qualifiers_key
        headers[PUBLISHED_AT] = str(self.clock())
        headers[CLIENT_ID] = self.client_id
        return WireEnvelope(subject or key.full_key, headers, body)

    def publish(self, event: Event) -> PublishResult:
        self._require()
        env = self.encode(event)
        if isinstance(env, RejectionRecord):
            self.stats.publish_rejected += 1
            logger.warning("not publishing %s: %s (%s)", env.subject, env.reason, env.detail)
            return PublishResult(False, env.reason, env.detail)
        self.transport.publish(env.subject, env.headers, env.body)
        self.stats.published += 1
        return PublishResult(True)

    # -- consumption ---------------------------------------------------
    def _reject(self, subject: str, reason: RejectReason, detail: str) -> RejectionRecord:
        record = RejectionRecord(subject, reason, detail, self.clock())
        self.stats.rejected += 1
        self.stats.rejections_by_reason[reason] += 1
        self.rejections.append(record)
        logger.warning("rejected message on %r: %s (%s)", subject, reason, detail)
        return record

    def consume(self, envelope: WireEnvelope, *, check_subject: bool = True) -> Event | RejectionRecord:
        """Rebuild an event from an envelope.

        Never raises for bad input: every envelope yields exactly one Event
        or one RejectionRecord.  ``check_subject`` is off for replies, whose
        subject is the requester's inbox rather than the event key.
        """
        self.stats.received += 1
        subject = envelope.subject
        headers = envelope.headers or {}
        missing = [h for h in REQUIRED_HEADERS if h not in headers]
        if missing:
            return self._reject(subject, RejectReason.MISSING_HEADER, ", ".join(missing))
        try:
            key = parse_key(headers[FULL_KEY])
        except MalformedKey as exc:
            return self._reject(subject, RejectReason.MALFORMED_KEY, str(exc))
        if headers[BASE_KEY] != key.base_key or headers[QUALIFIERS_KEY] != key.qualifiers_key:
            return self._reject(subject, RejectReason.MALFORMED_KEY, "derived key headers disagree with full key")
        if check_subject and subject != key.full_key:
            return self._reject(subject, RejectReason.MALFORMED_KEY, f"subject differs from key {key.full_key!r}")
        serde = self.registry.resolve(key)
        try:
            payload = serde.deserialize(envelope.body)
        except Exception as exc:
            return self._reject(subject, RejectReason.DESERIALIZE_FAILED, f"{type(exc).__name__}: {exc}")
        if self.validate and serde.validator is not None:
            self.stats.consume_validations += 1
            verdict = validate(serde, payload)
            if not verdict:
                return self._reject(subject, RejectReason.VALIDATION_FAILED, verdict.reason)
        metadata = {k[len(HEADER_PREFIX):]: v for k, v in headers.items() if k.startswith(HEADER_PREFIX)}
        metadata[SUBJECT_META] = subject
        try:
            event = Event(key, payload, metadata)
        except ValueError as exc:
            return self._reject(subject, RejectReason.MISSING_HEADER, f"unusable header: {exc}")
        self.stats.delivered += 1
        return event

    def subscribe(self, pattern: str, sink: Callable[[Event], Any] | Any) -> DistributedSubscription:
        """Route matching events to ``sink``: a callable or an object with ``put``."""
        compile_pattern(pattern)
        self._require()
        deliver = sink if callable(sink) else sink.put
        handle = DistributedSubscription(pattern)

        def on_envelope(env: WireEnvelope) -> None:
            handle.received += 1
            result = self.consume(env)
            if isinstance(result, RejectionRecord):
                handle.rejected += 1
                return
            handle.delivered += 1
            try:
                deliver(result)
            except Exception:
                self.stats.sink_errors += 1
                logger.exception("sink for %s failed", pattern)

        handle.token = self.transport.subscribe(pattern, on_envelope)
        with self._lock:
            self._subs[id(handle)] = handle
        return handle

    def unsubscribe(self, handle: DistributedSubscription) -> int:
        with self._lock:
            if self._subs.pop(id(handle), None) is None:
                raise UnknownHandle(handle)
        return self.transport.unsubscribe(handle.token)

    # -- request/reply -------------------------------------------------
    def request(self, event: Event, timeout: float = 1.0) -> Event:
        self._require()
        env = self.encode(event)
        if isinstance(env, RejectionRecord):
            self.stats.publish_rejected += 1
            raise ValidationFailed(env.detail)
        reply = self.transport.request(env.subject, env.headers, env.body, timeout)
        result = self.consume(reply, check_subject=False)
        if isinstance(result, RejectionRecord):
            raise ReplyRejected(result.reason, result.detail)
        return result

    def respond(self, pattern: str, responder: Callable[[Event], Event | None]) -> DistributedSubscription:
        """Answer requests on ``pattern``.

        A responder that raises (or returns None) sends nothing, so the
        requester times out; errors are counted in ``stats.responder_errors``.
        """
        compile_pattern(pattern)
        self._require()
        handle = DistributedSubscription(pattern)

        def on_request(env: WireEnvelope) -> None:
            handle.received += 1
            if not env.reply:
                logger.debug("ignoring message without reply subject on %s", env.subject)
                return
            request = self.consume(env)
            if isinstance(request, RejectionRecord):
                handle.rejected += 1
                return
            handle.delivered += 1
            try:
                answer = responder(request)
            except Exception:
                self.stats.responder_errors += 1
                logger.exception("responder for %s failed", pattern)
                return
            if answer is None:
                return
            out = self.encode(answer, subject=env.reply)
            if isinstance(out, RejectionRecord):
                self.stats.replies_rejected += 1
                logger.warning("reply on %s rejected: %s", env.reply, out.detail)
                return
            self.transport.publish(out.subject, out.headers, out.body)
            self.stats.replies_sent += 1

        handle.token = self.transport.subscribe(pattern, on_request)
        with self._lock:
            self._subs[id(handle)] = handle
        return handle

    # -- shutdown ------------------------------------------------------
    def stop(self, drain: bool = True, deadline: float | None = None) -> DistributedStopReport:
        """Drain (or drop) every subscription, then close the connection.

        Idempotent: later calls return a report with ``noop`` set.  Raises
        :class:`DrainTimeout` with the partial report when the deadline
        passes; the connection is closed regardless.
        """
        with self._lock:
            if self._stopped:
                return DistributedStopReport(noop=True)
            self._stopped = True
            subs = list(self._subs.values())
            self._subs.clear()
        started = time.monotonic()
        budget = self.drain_deadline if deadline is None else deadline
        report = DistributedStopReport(subscriptions=len(subs))
        if drain and self.transport.is_connected:
            try:
                self.transport.flush(budget)
            except Exception as exc:
                logger.warning("flush before drain failed: %s", exc)
                report.clean = False
        for sub in subs:
            if not self.transport.is_connected:
                report.clean = False
                break
            if drain:
                remaining = max(0.0, budget - (time.monotonic() - started))
                result = self.transport.drain(sub.token, remaining)
                report.delivered_during_drain += result.delivered
                report.discarded += result.discarded
                if result.timed_out:
                    report.clean = False
                else:
                    report.drained += 1
            else:
                report.discarded += self.transport.unsubscribe(sub.token)
        self.transport.close()
        report.elapsed = time.monotonic() - started
        if drain and not report.clean:
            raise DrainTimeout(report)
        return report
