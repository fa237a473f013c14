"""NATS adapter: nats-py running on an event loop in a dedicated thread."""

from __future__ import annotations

import asyncio
import logging
import threading
from collections.abc import Mapping

import nats as nats_client
from nats.aio.subscription import Subscription as NatsSubscription

from ..errors import NotConnected
from .base import DrainResult, Sink, TransportAdapter, WireEnvelope

logger = logging.getLogger(__name__)

DEFAULT_URL = "nats://127.0.0.1:4222"


class NatsTransport(TransportAdapter):
    """Synchronous facade over the asyncio NATS client.

    Subscribe, flush, drain and close are marshalled onto the loop thread
    and wait for completion.  Publish is fire-and-forget: it schedules the
    client call on the loop and returns.  nats-py appends to its outbound
    buffer before its first await, so tasks created in call order keep
    per-publisher ordering.  Failures are logged and counted in
    ``publish_errors``; ``flush`` waits until everything scheduled so far
    has reached the server.  Sinks run on the loop thread.
    """

    def __init__(
        self,
        url: str = DEFAULT_URL,
        name: str = "hybridfabric",
        connect_timeout: float = 2.0,
        op_timeout: float = 10.0,
    ):
        self.url = url
        self.name = name
        self.connect_timeout = connect_timeout
        self.op_timeout = op_timeout
        self._loop: asyncio.AbstractEventLoop | None = None
        self._thread: threading.Thread | None = None
        self._nc = None
        self.sink_errors = 0
        self.publish_errors = 0
        self.published = 0

    # -- loop plumbing -------------------------------------------------
    def _start_loop(self) -> None:
        self._loop = asyncio.new_event_loop()
        self._thread = threading.Thread(target=self._loop.run_forever, name=f"{self.name}-nats", daemon=True)
        self._thread.start()

    def _stop_loop(self) -> None:
        if self._loop is None:
            return
        self._loop.call_soon_threadsafe(self._loop.stop)
        if self._thread is not None and self._thread is not threading.current_thread():
            self._thread.join(self.op_timeout)
        self._loop.close() if not self._loop.is_running() else None
        self._loop = None
        self._thread = None

    def on_delivery_context(self) -> bool:
        return self._thread is not None and threading.current_thread() is self._thread

    def _call(self, coro, timeout: float | None = None):
        if self.on_delivery_context():
            coro.close()
            raise RuntimeError("blocking NATS call issued from the delivery thread")
        fut = asyncio.run_coroutine_threadsafe(coro, self._loop)
        return fut.result(self.op_timeout if timeout is None else timeout)

    def _require(self) -> None:
        if self._nc is None or not self._nc.is_connected:
            raise NotConnected(f"not connected to {self.url}")

    # -- adapter -------------------------------------------------------
    def connect(self) -> None:
        if self.is_connected:
            return
        self._start_loop()

        async def _error(exc):
            logger.warning("nats client error: %s", exc)

        try:
            self._nc = self._call(
                nats_client.connect(
                    self.url,
                    name=self.name,
                    connect_timeout=self.connect_timeout,
                    allow_reconnect=False,
                    max_reconnect_attempts=0,
                    error_cb=_error,
                ),
                timeout=self.connect_timeout + 2.0,
            )
        except Exception as exc:
            self._stop_loop()
            raise NotConnected(f"cannot connect to {self.url}: {exc}") from exc

    @property
    def is_connected(self) -> bool:
        return self._nc is not None and self._nc.is_connected

    def publish(self, subject: str, headers: Mapping[str, str], body: bytes, reply: str | None = None) -> None:
        self._require()
        args = (subject, body, reply or "", dict(headers) or None)
        self.published += 1
        if self.on_delivery_context():
            self._spawn_publish(args)
        else:
            self._loop.call_soon_threadsafe(self._spawn_publish, args)

    def _spawn_publish(self, args) -> None:
        subject, body, reply, headers = args
        task = self._loop.create_task(self._nc.publish(subject, body, reply=reply, headers=headers))
        task.add_done_callback(self._publish_done)

    def _publish_done(self, task: asyncio.Task) -> None:
        if not task.cancelled() and task.exception() is not None:
            self.publish_errors += 1
            logger.warning("nats publish failed: %s", task.exception())

    def subscribe(self, pattern: str, sink: Sink) -> NatsSubscription:
        self._require()

        async def _deliver(msg) -> None:
            env = WireEnvelope(msg.subject, dict(msg.headers or {}), msg.data, msg.reply or None)
            try:
                sink(env)
            except Exception:
                self.sink_errors += 1
                logger.exception("sink for %s failed", pattern)

        return self._call(self._nc.subscribe(pattern, cb=_deliver))

    def unsubscribe(self, token: object) -> int:
        sub: NatsSubscription = token  # type: ignore[assignment]
        if self._nc is None or self._nc.is_closed:
            return 0
        pending = sub.pending_msgs
        try:
            self._call(sub.unsubscribe())
        except nats_client.errors.BadSubscriptionError:
            return 0
        return pending

    def drain(self, token: object, timeout: float) -> DrainResult:
        sub: NatsSubscription = token  # type: ignore[assignment]
        if self._nc is None or self._nc.is_closed:
            return DrainResult()
        before = sub.delivered

        async def _drain():
            await asyncio.wait_for(sub.drain(), timeout)

        try:
            self._call(_drain(), timeout=timeout + 1.0)
        except (asyncio.TimeoutError, TimeoutError):
            return DrainResult(sub.delivered - before, sub.pending_msgs, timed_out=True)
        except nats_client.errors.BadSubscriptionError:
            return DrainResult()
        return DrainResult(sub.delivered - before)

    def flush(self, timeout: float = 5.0) -> None:
        self._require()
        self._call(self._nc.flush(timeout), timeout=timeout + 1.0)

    def close(self) -> None:
        if self._nc is not None and not self._nc.is_closed:
            try:
                self._call(self._nc.close())
            except Exception as exc:
                logger.warning("error closing nats connection: %s", exc)
        self._nc = None
        self._stop_loop()
