"""In-process publish/subscribe with a publish queue and a subscription queue."""

from __future__ import annotations

import itertools
import logging
import threading
from collections.abc import Callable
from dataclasses import dataclass
from typing import NamedTuple

from .errors import QueueFull, UnknownHandle
from .keys import Event
from .matcher import SubscriptionPattern, compile_pattern, matches
from .queues import REJECT, BoundedQueue

logger = logging.getLogger(__name__)

Handler = Callable[[Event], object]

DEFAULT_CAPACITY = 1024


class DeliverySummary(NamedTuple):
    handled: int
    enqueued: int


@dataclass(frozen=True, eq=False)
class Subscription:
    id: int
    pattern: SubscriptionPattern
    handler: Handler | None

    @property
    def queued(self) -> bool:
        return self.handler is None


class PubSubContext:
    """Local event bus.

    Handler subscriptions run synchronously on the publishing thread.
    Handler-less subscriptions each get their own copy of a matching event
    on the subscription queue.  The publish queue is only a staging area
    for the bridge export loop; local publications never touch it.
    """

    def __init__(
        self,
        publish_capacity: int = DEFAULT_CAPACITY,
        subscription_capacity: int = DEFAULT_CAPACITY,
        publish_policy: str = REJECT,
        subscription_policy: str = REJECT,
        name: str = "local",
    ):
        self.name = name
        self.publish_queue: BoundedQueue[Event] = BoundedQueue(publish_capacity, publish_policy)
        self.subscription_queue: BoundedQueue[Event] = BoundedQueue(subscription_capacity, subscription_policy)
        self._ids = itertools.count(1)
        self._lock = threading.Lock()
        # Copy-on-write tuple so publishers see a consistent snapshot without locking.
        self._subs: tuple[Subscription, ...] = ()
        self._route_cache: dict[str, tuple[Subscription, ...]] = {}
        self.handler_errors = 0
        self.dropped = 0

    def subscribe(self, pattern: str, handler: Handler | None = None) -> Subscription:
        compiled = compile_pattern(pattern)
        sub = Subscription(next(self._ids), compiled, handler)
        with self._lock:
            self._subs = (*self._subs, sub)
            self._route_cache = {}
        return sub

    def unsubscribe(self, handle: Subscription) -> None:
        with self._lock:
            if handle not in self._subs:
                raise UnknownHandle(handle)
            self._subs = tuple(s for s in self._subs if s is not handle)
            self._route_cache = {}

    @property
    def subscriptions(self) -> tuple[Subscription, ...]:
        return self._subs

    def _route(self, subject: str) -> tuple[Subscription, ...]:
        cache = self._route_cache
        hit = cache.get(subject)
        if hit is None:
            subs = self._subs
            hit = tuple(s for s in subs if matches(s.pattern, subject))
            if subs is self._subs:
                if len(cache) > 4096:
                    cache.clear()
                cache[subject] = hit
        return hit

    def publish_local(self, event: Event, timeout: float | None = None) -> DeliverySummary:
        """Dispatch to every matching subscription.

        A full subscription queue does not stop delivery to the remaining
        subscriptions; :class:`QueueFull` is raised afterwards carrying the
        partial summary.
        """
        handled = enqueued = failed = 0
        for sub in self._route(event.key.full_key):
            if sub.handler is not None:
                try:
                    sub.handler(event)
                except Exception:
                    self.handler_errors += 1
                    logger.exception("handler for %s failed on %s", sub.pattern, event.key)
                handled += 1
            else:
                try:
                    self.subscription_queue.put(event, timeout)
                    enqueued += 1
                except QueueFull:
                    failed += 1
        summary = DeliverySummary(handled, enqueued)
        if failed:
            self.dropped += failed
            raise QueueFull(f"subscription queue full, {failed} copies of {event.key} dropped", summary)
        return summary

    def publish_for_export(self, event: Event, timeout: float | None = None) -> None:
        self.publish_queue.put(event, timeout)

    def poll(self, timeout: float | None = 0.0) -> Event | None:
        return self.subscription_queue.get(timeout)

    def __repr__(self) -> str:
        return (
            f"PubSubContext({self.name!r}, subs={len(self._subs)}, "
            f"publish_queue={len(self.publish_queue)}, subscription_queue={len(self.subscription_queue)})"
        )
