"""Bounded FIFO with a configurable overflow policy and a close switch."""

from __future__ import annotations

import threading
import time
from collections import deque
from typing import Generic, TypeVar

from .errors import QueueClosed, QueueFull

T = TypeVar("T")

REJECT = "reject"
BLOCK = "block"
POLICIES = (REJECT, BLOCK)


class BoundedQueue(Generic[T]):
    """Multi-producer multi-consumer FIFO.

    ``reject`` raises :class:`QueueFull` at capacity; ``block`` waits for
    space (optionally up to ``timeout``).  Closing stops new puts but lets
    consumers take what is left, and items taken after the close are
    counted so a stopping owner can account for its backlog exactly.
    """

    def __init__(self, capacity: int = 1024, policy: str = REJECT):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        if policy not in POLICIES:
            raise ValueError(f"unknown overflow policy {policy!r}")
        self.capacity = capacity
        self.policy = policy
        self._items: deque[T] = deque()
        self._lock = threading.Lock()
        self._not_empty = threading.Condition(self._lock)
        self._not_full = threading.Condition(self._lock)
        self._closed = False
        self.taken_after_close = 0

    def put(self, item: T, timeout: float | None = None) -> None:
        with self._lock:
            if self._closed:
                raise QueueClosed("queue is closed")
            if len(self._items) >= self.capacity:
                if self.policy == REJECT:
                    raise QueueFull(f"queue at capacity {self.capacity}")
                deadline = None if timeout is None else time.monotonic() + timeout
                while len(self._items) >= self.capacity:
                    remaining = None if deadline is None else deadline - time.monotonic()
                    if remaining is not None and remaining <= 0:
                        raise QueueFull(f"queue at capacity {self.capacity} after {timeout}s")
                    self._not_full.wait(remaining)
                    if self._closed:
                        raise QueueClosed("queue closed while waiting for space")
            self._items.append(item)
            self._not_empty.notify()

    def take(self, timeout: float | None = 0.0) -> tuple[T | None, bool]:
        """Remove the oldest item.

        Returns ``(item, after_close)``; ``item`` is None on timeout.  A
        timeout of None waits indefinitely.
        """
        with self._lock:
            if not self._items:
                if timeout is not None and timeout <= 0:
                    return None, self._closed
                deadline = None if timeout is None else time.monotonic() + timeout
                while not self._items:
                    remaining = None if deadline is None else deadline - time.monotonic()
                    if remaining is not None and remaining <= 0:
                        return None, self._closed
                    self._not_empty.wait(remaining)
            item = self._items.popleft()
            if self._closed:
                self.taken_after_close += 1
            self._not_full.notify()
            return item, self._closed

    def get(self, timeout: float | None = 0.0) -> T | None:
        return self.take(timeout)[0]

    def close(self) -> int:
        """Refuse further puts; return the number of items still queued."""
        with self._lock:
            self._closed = True
            self._not_full.notify_all()
            self._not_empty.notify_all()
            return len(self._items)

    def reopen(self) -> None:
        with self._lock:
            self._closed = False
            self.taken_after_close = 0

    def clear(self) -> int:
        with self._lock:
            n = len(self._items)
            self._items.clear()
            self._not_full.notify_all()
            return n

    @property
    def closed(self) -> bool:
        return self._closed

    def __len__(self) -> int:
        return len(self._items)
