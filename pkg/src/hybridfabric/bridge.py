"""Bridge runtime moving events between a local and a distributed context."""

from __future__ import annotations

import logging
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .distributed import DistributedContext, DistributedStopReport
from .errors import AlreadyStarted, DrainTimeout, NotConnected, QueueClosed, QueueFull, SerializationFailed
from .keys import Event
from .local import PubSubContext
from .matcher import compile_pattern, matches
from .queues import BLOCK

logger = logging.getLogger(__name__)

ABRUPT = "abrupt"
DRAIN = "drain"
STOP_MODES = (ABRUPT, DRAIN)

BRIDGED_META = "cns.bridged"


@dataclass(frozen=True)
class BridgeConfig:
    export_patterns: tuple[str, ...] = (">",)
    import_patterns: tuple[str, ...] = ()
    stop_mode: str = DRAIN
    drain_deadline: float = 5.0
    loop_idle_wait: float = 0.001

    def __post_init__(self) -> None:
        object.__setattr__(self, "export_patterns", tuple(self.export_patterns))
        object.__setattr__(self, "import_patterns", tuple(self.import_patterns))
        for p in (*self.export_patterns, *self.import_patterns):
            compile_pattern(p)
        if self.stop_mode not in STOP_MODES:
            raise ValueError(f"stop_mode must be one of {STOP_MODES}")
        if self.drain_deadline <= 0:
            raise ValueError("drain_deadline must be positive")
        if self.loop_idle_wait <= 0:
            raise ValueError("loop_idle_wait must be positive")


@dataclass
class BridgeStats:
    exported: int = 0
    imported: int = 0
    export_failures: int = 0
    import_rejections: int = 0
    filtered: int = 0
    loop_suppressed: int = 0
    stopped_at: float | None = None
    drained_cleanly: bool | None = None


@dataclass
class BridgeStopReport:
    mode: str
    backlog_at_stop: int = 0
    delivered_after_stop: int = 0
    lost_estimate: int = 0
    skipped_after_stop: int = 0
    elapsed: float = 0.0
    clean: bool = True
    distributed: DistributedStopReport | None = field(default=None, repr=False)
    noop: bool = False


class Bridge:
    """Export loop: local publish queue -> distributed publisher.
    Import side: distributed subscriptions -> ``publish_local``.

    Imported events carry ``cns.bridged=<client id>`` in their metadata and
    the export loop refuses to re-export them, which breaks the cycle when
    a local module relays what it receives.
    """

    def __init__(self, local: PubSubContext, dctx: DistributedContext, config: BridgeConfig | None = None):
        self.local = local
        self.dctx = dctx
        self.config = config or BridgeConfig()
        self.stats = BridgeStats()
        self._export_patterns = tuple(compile_pattern(p) for p in self.config.export_patterns)
        self._active = threading.Event()
        self._started = False
        self._stopped = False
        self._stop_lock = threading.Lock()
        self._thread: threading.Thread | None = None
        self._import_subs = []
        self._offload: ThreadPoolExecutor | None = None
        self._after_close = [0, 0, 0]  # exported, failed, skipped

    @property
    def identity(self) -> str:
        return self.dctx.client_id

    @property
    def running(self) -> bool:
        return self._active.is_set()

    def start(self) -> Bridge:
        if self._started:
            raise AlreadyStarted("bridge already started")
        if not self.dctx.is_connected:
            raise NotConnected("distributed context is not connected")
        self._started = True
        if self.local.subscription_queue.policy == BLOCK:
            # one worker keeps imported events in arrival order
            self._offload = ThreadPoolExecutor(max_workers=1, thread_name_prefix="bridge-offload")
        for pattern in self.config.import_patterns:
            self._import_subs.append(self.dctx.subscribe(pattern, self._on_import))
        self._active.set()
        self._thread = threading.Thread(target=self._export_loop, name=f"bridge-export-{self.identity}", daemon=True)
        self._thread.start()
        return self

    # -- export --------------------------------------------------------
    def _should_export(self, event: Event) -> bool:
        if event.metadata.get(BRIDGED_META) == self.identity:
            self.stats.loop_suppressed += 1
            return False
        subject = event.key.full_key
        for p in self._export_patterns:
            if matches(p, subject):
                return True
        self.stats.filtered += 1
        return False

    def _export_loop(self) -> None:
        queue = self.local.publish_queue
        wait = self.config.loop_idle_wait
        after = self._after_close
        while self._active.is_set():
            event, after_close = queue.take(wait)
            if event is None:
                if after_close and len(queue) == 0:
                    break
                continue
            if not self._should_export(event):
                if after_close:
                    after[2] += 1
                continue
            try:
                result = self.dctx.publish(event)
            except (NotConnected, SerializationFailed) as exc:
                logger.warning("export of %s failed: %s", event.key, exc)
                result = None
            if result:
                self.stats.exported += 1
                if after_close:
                    after[0] += 1
            else:
                self.stats.export_failures += 1
                if after_close:
                    after[1] += 1

    # -- import --------------------------------------------------------
    def _localize(self, event: Event) -> None:
        try:
            self.local.publish_local(event)
        except QueueFull:
            self.stats.import_rejections += 1
        except QueueClosed:
            self.stats.import_rejections += 1

    def _on_import(self, event: Event) -> None:
        event = event.with_metadata({BRIDGED_META: self.identity})
        self.stats.imported += 1
        if self._offload is not None:
            self._offload.submit(self._localize, event)
        else:
            self._localize(event)

    # -- stop ----------------------------------------------------------
    def stop(self) -> BridgeStopReport:
        """Stop in the configured mode.

        ``abrupt`` clears the active flag and counts whatever is still in
        the publish queue as lost.  ``drain`` closes the publish queue,
        keeps the export loop running until it is empty or the deadline
        passes, then drains and closes the distributed context.  In both
        modes ``delivered_after_stop + lost_estimate + skipped_after_stop``
        equals ``backlog_at_stop``.
        """
        with self._stop_lock:
            if self._stopped:
                return BridgeStopReport(self.config.stop_mode, noop=True)
            self._stopped = True
        mode = self.config.stop_mode
        started = time.monotonic()
        queue = self.local.publish_queue
        backlog = queue.close()
        report = BridgeStopReport(mode, backlog_at_stop=backlog)
        deadline = started + self.config.drain_deadline
        if mode == DRAIN and self._thread is not None:
            while len(queue) and time.monotonic() < deadline:
                time.sleep(self.config.loop_idle_wait)
        self._active.clear()
        if self._thread is not None:
            self._thread.join(max(self.config.drain_deadline, 1.0))
        exported_after, failed_after, skipped_after = self._after_close
        remaining = len(queue)
        report.delivered_after_stop = exported_after
        report.skipped_after_stop = skipped_after
        report.lost_estimate = remaining + failed_after
        if mode == DRAIN and remaining:
            report.clean = False
        try:
            left = max(0.001, deadline - time.monotonic()) if mode == DRAIN else None
            report.distributed = self.dctx.stop(drain=(mode == DRAIN), deadline=left)
        except DrainTimeout as exc:
            report.distributed = exc.report
            report.clean = False
        if self._offload is not None:
            self._offload.shutdown(wait=(mode == DRAIN), cancel_futures=(mode == ABRUPT))
        report.elapsed = time.monotonic() - started
        self.stats.stopped_at = time.time()
        self.stats.drained_cleanly = report.clean if mode == DRAIN else False
        if mode == DRAIN and not report.clean:
            raise DrainTimeout(report)
        return report

    def __enter__(self) -> Bridge:
        if not self._started:
            self.start()
        return self

    def __exit__(self, *exc) -> None:
        try:
            self.stop()
        except DrainTimeout:
            logger.warning("bridge drain deadline exceeded")


def start_bridge(local: PubSubContext, dctx: DistributedContext, config: BridgeConfig | None = None) -> Bridge:
    return Bridge(local, dctx, config).start()
