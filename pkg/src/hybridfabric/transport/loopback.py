"""In-memory transport with NATS subject semantics, for hermetic runs."""

from __future__ import annotations

import itertools
import logging
import threading
from collections import deque
from collections.abc import Mapping

from ..errors import NotConnected
from ..matcher import compile_pattern, matches
from .base import DrainResult, Sink, TransportAdapter, WireEnvelope

logger = logging.getLogger(__name__)

_STOP = object()


class LoopbackBroker:
    """Shared routing table standing in for a server; connect any number of transports to it."""

    def __init__(self):
        self._lock = threading.Lock()
        self._subs: tuple[_LoopbackSubscription, ...] = ()
        self.published = 0

    def _add(self, sub: _LoopbackSubscription) -> None:
        with self._lock:
            self._subs = (*self._subs, sub)

    def _remove(self, sub: _LoopbackSubscription) -> None:
        with self._lock:
            self._subs = tuple(s for s in self._subs if s is not sub)

    def route(self, env: WireEnvelope) -> int:
        self.published += 1
        n = 0
        for sub in self._subs:
            if matches(sub.pattern, env.subject) and sub.offer(env):
                n += 1
        return n

    def connect(self, name: str = "loopback") -> LoopbackTransport:
        t = LoopbackTransport(self, name)
        t.connect()
        return t


class _LoopbackSubscription:
    def __init__(self, owner: LoopbackTransport, sid: int, pattern: str, sink: Sink):
        self.owner = owner
        self.sid = sid
        self.pattern = compile_pattern(pattern)
        self.sink = sink
        self._pending: deque = deque()
        self._cond = threading.Condition()
        self._accepting = True
        self.delivered = 0
        self.thread = threading.Thread(
            target=self._run, name=f"{owner.name}-sub{sid}", daemon=True
        )

    def offer(self, env: WireEnvelope) -> bool:
        with self._cond:
            if not self._accepting:
                return False
            self._pending.append(env)
            self._cond.notify()
            return True

    def _run(self) -> None:
        while True:
            with self._cond:
                while not self._pending:
                    self._cond.wait()
                env = self._pending.popleft()
            if env is _STOP:
                return
            try:
                self.sink(env)
            except Exception:
                self.owner.sink_errors += 1
                logger.exception("sink for %s failed", self.pattern)
            self.delivered += 1

    def stop_accepting(self) -> None:
        with self._cond:
            self._accepting = False

    def finish(self, discard: bool) -> int:
        """Queue the stop marker after (or instead of) pending envelopes."""
        with self._cond:
            self._accepting = False
            dropped = 0
            if discard:
                dropped = sum(1 for e in self._pending if e is not _STOP)
                self._pending.clear()
            self._pending.append(_STOP)
            self._cond.notify()
        return dropped

    def pending(self) -> int:
        return len(self._pending)


class LoopbackTransport(TransportAdapter):
    """One client connection to a :class:`LoopbackBroker`.

    Each subscription has its own delivery thread, so delivery is ordered
    per subscription and a slow sink never blocks the publisher.
    """

    def __init__(self, broker: LoopbackBroker | None = None, name: str = "loopback"):
        self.broker = broker if broker is not None else LoopbackBroker()
        self.name = name
        self._connected = False
        self._ids = itertools.count(1)
        self._subs: dict[int, _LoopbackSubscription] = {}
        self.sink_errors = 0
        self.published = 0

    def connect(self) -> None:
        self._connected = True

    @property
    def is_connected(self) -> bool:
        return self._connected

    def _require(self) -> None:
        if not self._connected:
            raise NotConnected(f"{self.name} is not connected")

    def publish(self, subject: str, headers: Mapping[str, str], body: bytes, reply: str | None = None) -> None:
        self._require()
        self.published += 1
        self.broker.route(WireEnvelope(subject, dict(headers), bytes(body), reply))

    def subscribe(self, pattern: str, sink: Sink) -> int:
        self._require()
        sub = _LoopbackSubscription(self, next(self._ids), pattern, sink)
        self._subs[sub.sid] = sub
        sub.thread.start()
        self.broker._add(sub)
        return sub.sid

    def _pop(self, token: object) -> _LoopbackSubscription | None:
        sub = self._subs.pop(token, None)  # type: ignore[arg-type]
        if sub is not None:
            self.broker._remove(sub)
        return sub

    def unsubscribe(self, token: object) -> int:
        sub = self._pop(token)
        if sub is None:
            return 0
        dropped = sub.finish(discard=True)
        if threading.get_ident() != sub.thread.ident:
            sub.thread.join()
        return dropped

    def drain(self, token: object, timeout: float) -> DrainResult:
        sub = self._subs.get(token)  # type: ignore[arg-type]
        if sub is None:
            return DrainResult()
        sub.stop_accepting()
        self._pop(token)
        before = sub.delivered
        sub.finish(discard=False)
        if threading.get_ident() == sub.thread.ident:
            return DrainResult(delivered=0)
        sub.thread.join(timeout)
        if sub.thread.is_alive():
            dropped = sub.finish(discard=True)
            return DrainResult(sub.delivered - before, dropped, timed_out=True)
        return DrainResult(sub.delivered - before)

    def flush(self, timeout: float = 5.0) -> None:
        self._require()

    def close(self) -> None:
        for sid in list(self._subs):
            self.unsubscribe(sid)
        self._connected = False

    def subscription_count(self) -> int:
        return len(self._subs)
