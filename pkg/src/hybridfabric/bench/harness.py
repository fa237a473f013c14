"""Benchmark runs over the local, distributed and hybrid paths."""

from __future__ import annotations

import logging
import random
import string
import threading
import time
from collections.abc import Callable, Sequence
from dataclasses import replace

from ..bridge import ABRUPT, Bridge, BridgeConfig
from ..distributed import DistributedContext
from ..errors import InvariantViolation, NotConnected, QueueFull, SetupFailed
from ..families import SNAPSHOT, bind
from ..keys import Event
from ..local import PubSubContext
from ..serde import SerDeRegistry
from ..transport import LoopbackBroker, TransportAdapter
from .records import BenchConfig, BenchmarkRecord
from .stats import compute_stats, mean_and_spread, throughput_rate

logger = logging.getLogger(__name__)

Clock = Callable[[], int]
SENT_META = "bench.sent-ns"
BENCH_KEY = bind(SNAPSHOT, ["bench", "node1"])
BENCH_PATTERN = f"{SNAPSHOT.base_key}.bench.>"
SETTLE = 0.05


def payload_data(size: int, seed: int) -> str:
    """Deterministic ASCII filler of exactly ``size`` bytes."""
    rng = random.Random(seed)
    return "".join(rng.choices(string.ascii_letters + string.digits, k=size))


def make_registry(codec: str) -> SerDeRegistry:
    reg = SerDeRegistry()
    reg.register(SNAPSHOT.serde(codec=codec))
    return reg.freeze()


class Receiver:
    """Counts arrivals and records one-way latency in nanoseconds."""

    def __init__(self, clock: Clock, expected: int = 0):
        self.clock = clock
        self.latencies: list[int] = []
        self.count = 0
        self.last_ns: int | None = None
        self._cond = threading.Condition()

    def __call__(self, event: Event) -> None:
        now = self.clock()
        sent = int(event.metadata[SENT_META])
        with self._cond:
            self.latencies.append(now - sent)
            self.count += 1
            self.last_ns = now
            self._cond.notify_all()

    def wait_for(self, n: int, timeout: float) -> bool:
        deadline = time.monotonic() + timeout
        with self._cond:
            while self.count < n:
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    return False
                self._cond.wait(remaining)
        return True


class _Consumer(threading.Thread):
    """Polls a local subscription queue into a receiver."""

    def __init__(self, local: PubSubContext, receiver: Receiver):
        super().__init__(name="bench-consumer", daemon=True)
        self.local = local
        self.receiver = receiver
        self.running = True

    def run(self) -> None:
        while self.running:
            ev = self.local.poll(0.05)
            if ev is not None:
                self.receiver(ev)

    def stop(self) -> None:
        self.running = False
        self.join(2.0)


class Rig:
    """One path's wiring for a single benchmark run."""

    path = ""

    def __init__(self, config: BenchConfig, receiver: Receiver, *, use_consumer: bool = True):
        self.config = config
        self.receiver = receiver
        self.use_consumer = use_consumer
        self.closers: list[Callable[[], object]] = []
        self.send: Callable[[Event], object] = lambda event: None

    def _transport(self, name: str) -> TransportAdapter:
        cfg = self.config
        if cfg.server is None:
            if not hasattr(self, "_broker"):
                self._broker = LoopbackBroker()
            return self._broker.connect(name)
        from ..transport.nats_adapter import NatsTransport

        t = NatsTransport(cfg.server, name=name)
        try:
            t.connect()
        except NotConnected as exc:
            raise SetupFailed(self.path, str(exc)) from exc
        return t

    def _dctx(self, name: str) -> DistributedContext:
        ctx = DistributedContext(
            self._transport(name),
            make_registry(self.config.codec),
            client_id=name,
            validate=self.config.validate,
            drain_deadline=self.config.drain_deadline,
        )
        return ctx

    def _sink_local(self, local: PubSubContext) -> None:
        if self.use_consumer:
            local.subscribe(BENCH_PATTERN)
            consumer = _Consumer(local, self.receiver)
            consumer.start()
            self.closers.append(consumer.stop)
        else:
            local.subscribe(BENCH_PATTERN, self.receiver)

    def close(self) -> None:
        for closer in reversed(self.closers):
            try:
                closer()
            except Exception:
                logger.exception("error while tearing down %s rig", self.path)
        self.closers.clear()


class LocalRig(Rig):
    path = "local"

    def __init__(self, config, receiver, **kw):
        super().__init__(config, receiver, **kw)
        cap = config.messages + 16
        self.local = PubSubContext(publish_capacity=cap, subscription_capacity=cap)
        self._sink_local(self.local)
        self.send = self.local.publish_local


class DistributedRig(Rig):
    path = "distributed"

    def __init__(self, config, receiver, **kw):
        super().__init__(config, receiver, **kw)
        self.publisher = self._dctx("bench-pub")
        self.closers.append(lambda: self.publisher.stop(drain=False))
        self.subscriber = self._dctx("bench-sub")
        self.closers.append(lambda: self.subscriber.stop(drain=False))
        self.subscriber.subscribe(BENCH_PATTERN, receiver)
        self.subscriber.transport.flush()
        self.send = self.publisher.publish


class HybridRig(Rig):
    path = "hybrid"

    def __init__(self, config, receiver, *, stop_mode: str = ABRUPT, **kw):
        super().__init__(config, receiver, **kw)
        cap = config.messages + 16
        bcfg = dict(stop_mode=stop_mode, drain_deadline=config.drain_deadline)
        self.source = PubSubContext(publish_capacity=cap, name="node-a")
        self.dctx_a = self._dctx("bench-node-a")
        self.bridge_a = Bridge(self.source, self.dctx_a, BridgeConfig(export_patterns=(BENCH_PATTERN,), **bcfg))
        self.sink = PubSubContext(subscription_capacity=cap, name="node-b")
        self._sink_local(self.sink)
        self.dctx_b = self._dctx("bench-node-b")
        self.bridge_b = Bridge(self.sink, self.dctx_b, BridgeConfig(export_patterns=(), import_patterns=(BENCH_PATTERN,), **bcfg))
        self.bridge_b.start()
        self.closers.append(self._quiet_stop(self.bridge_b))
        self.dctx_b.transport.flush()
        self.bridge_a.start()
        self.closers.append(self._quiet_stop(self.bridge_a))
        self.send = self.source.publish_for_export

    @staticmethod
    def _quiet_stop(bridge: Bridge):
        def _stop():
            try:
                bridge.stop()
            except Exception as exc:
                logger.warning("bridge stop during teardown: %s", exc)

        return _stop


RIGS = {"local": LocalRig, "distributed": DistributedRig, "hybrid": HybridRig}


def open_rig(config: BenchConfig, receiver: Receiver, **kw) -> Rig:
    try:
        return RIGS[config.path](config, receiver, **kw)
    except SetupFailed:
        raise
    except Exception as exc:
        raise SetupFailed(config.path, f"{type(exc).__name__}: {exc}") from exc


def _events(config: BenchConfig, clock: Clock):
    data = payload_data(config.payload_size, config.seed)
    for i in range(config.messages):
        yield Event(BENCH_KEY, {"sequence": i, "data": data}, {SENT_META: str(clock())})


def _validator_counts(rig: Rig) -> tuple[int | None, int | None]:
    if isinstance(rig, DistributedRig):
        return rig.publisher.stats.publish_validations, rig.subscriber.stats.consume_validations
    if isinstance(rig, HybridRig):
        return rig.dctx_a.stats.publish_validations, rig.dctx_b.stats.consume_validations
    return None, None


def _check_validator_counts(config: BenchConfig, counts: tuple[int | None, int | None]) -> None:
    expected = config.messages if config.validate else 0
    for side, n in zip(("publish", "consume"), counts):
        if n is not None and n != expected:
            raise InvariantViolation(f"{side}-side validator ran {n} times, expected {expected}")


def _one_latency_run(config: BenchConfig, clock: Clock) -> dict:
    receiver = Receiver(clock)
    rig = open_rig(config, receiver)
    try:
        for i, event in enumerate(_events(config, clock)):
            rig.send(event)
            if not receiver.wait_for(i + 1, config.timeout):
                raise InvariantViolation(f"message {i} not delivered on {config.path} within {config.timeout}s")
        counts = _validator_counts(rig)
    finally:
        rig.close()
    _check_validator_counts(config, counts)
    stats = compute_stats([ns / 1000.0 for ns in receiver.latencies])
    return {
        "delivered": receiver.count,
        "mean_us": stats.mean,
        "stddev_us": stats.stddev,
        "p95_us": stats.p95,
        "p99_us": stats.p99,
        "max_us": stats.max,
        "validator_calls_publish": counts[0],
        "validator_calls_consume": counts[1],
    }


def _one_throughput_run(config: BenchConfig, clock: Clock) -> dict:
    receiver = Receiver(clock)
    rig = open_rig(config, receiver)
    try:
        events = list(_events(config, clock=lambda: 0))
        first = clock()
        for event in events:
            try:
                rig.send(event.with_metadata({SENT_META: str(clock())}))
            except QueueFull as exc:
                raise InvariantViolation(f"queue overflow during throughput run: {exc}") from exc
        if not receiver.wait_for(config.messages, config.timeout):
            raise InvariantViolation(
                f"only {receiver.count}/{config.messages} delivered on {config.path} within {config.timeout}s"
            )
        counts = _validator_counts(rig)
    finally:
        rig.close()
    _check_validator_counts(config, counts)
    elapsed_s = (receiver.last_ns - first) / 1e9
    stats = compute_stats([ns / 1000.0 for ns in receiver.latencies])
    return {
        "delivered": receiver.count,
        "elapsed_s": elapsed_s,
        "throughput_mps": throughput_rate(receiver.count, elapsed_s),
        "mean_us": stats.mean,
        "stddev_us": stats.stddev,
        "p95_us": stats.p95,
        "p99_us": stats.p99,
        "max_us": stats.max,
        "validator_calls_publish": counts[0],
        "validator_calls_consume": counts[1],
    }


def _repeat(config: BenchConfig, run: Callable[[], dict], on_run: Callable[[int, bool], None] | None = None) -> list[dict]:
    """``warmup`` discarded runs followed by ``repetitions`` recorded ones."""
    recorded = []
    for i in range(config.warmup + config.repetitions):
        warm = i < config.warmup
        if on_run is not None:
            on_run(i, warm)
        result = run()
        if not warm:
            recorded.append(result)
    return recorded


def _base_record(config: BenchConfig, series: str, case: str = "") -> BenchmarkRecord:
    return BenchmarkRecord(
        series=series,
        path=config.path,
        payload_size=config.payload_size,
        messages=config.messages,
        repetitions=config.repetitions,
        warmup=config.warmup,
        codec=config.codec,
        validate=config.validate,
        transport=config.transport,
        case=case,
    )


def _fill_latency(record: BenchmarkRecord, runs: list[dict]) -> None:
    record.mean_latency_us, record.latency_stddev_us = mean_and_spread([r["mean_us"] for r in runs])
    record.within_run_stddev_us = mean_and_spread([r["stddev_us"] for r in runs])[0]
    record.p95_us = mean_and_spread([r["p95_us"] for r in runs])[0]
    record.p99_us = mean_and_spread([r["p99_us"] for r in runs])[0]
    record.max_us = max(r["max_us"] for r in runs)
    calls = [r.get("validator_calls_publish") for r in runs]
    if calls[0] is not None:
        record.validator_calls_publish = calls[-1]
        record.validator_calls_consume = runs[-1].get("validator_calls_consume")


def check_record(record: BenchmarkRecord) -> None:
    """Raise InvariantViolation if a finished record is internally inconsistent."""
    if record.mean_latency_us is not None:
        if not (record.p95_us <= record.p99_us <= record.max_us):
            raise InvariantViolation(f"percentiles out of order: {record.p95_us}, {record.p99_us}, {record.max_us}")
        if record.mean_latency_us > record.max_us:
            raise InvariantViolation("mean latency exceeds max")
    if record.completion_rate is not None:
        if not 0.0 <= record.completion_rate <= 1.0:
            raise InvariantViolation(f"completion rate {record.completion_rate} outside [0, 1]")
        for run in record.runs:
            if run["received_before_join"] + run["estimated_lost"] != run["sent_before_stop"]:
                raise InvariantViolation(f"conservation failed in run {run}")


def run_latency(config: BenchConfig, clock: Clock = time.perf_counter_ns, on_run=None) -> BenchmarkRecord:
    config = replace(config, series="latency")
    runs = _repeat(config, lambda: _one_latency_run(config, clock), on_run)
    return _finish(config, runs)


def run_throughput(config: BenchConfig, clock: Clock = time.perf_counter_ns, on_run=None) -> BenchmarkRecord:
    config = replace(config, series="throughput")
    runs = _repeat(config, lambda: _one_throughput_run(config, clock), on_run)
    return _finish(config, runs)


def _finish(config: BenchConfig, runs: list[dict]) -> BenchmarkRecord:
    record = _base_record(config, config.series)
    record.runs = runs
    _fill_latency(record, runs)
    if config.series == "throughput":
        record.throughput_mps, record.throughput_stddev_mps = mean_and_spread([r["throughput_mps"] for r in runs])
    check_record(record)
    return record


def run_interleaved(
    config: BenchConfig, paths: Sequence[str], clock: Clock = time.perf_counter_ns
) -> dict[str, BenchmarkRecord]:
    """Latency or throughput for several paths, one repetition of each per round.

    Rounds rotate the path order, so a slow stretch on the host is spread
    over all paths instead of landing on whichever path happened to run
    then.  The local path never uses the server.
    """
    one = {"latency": _one_latency_run, "throughput": _one_throughput_run}.get(config.series)
    if one is None:
        raise ValueError(f"cannot interleave series {config.series!r}")
    configs = {p: replace(config, path=p, server=None if p == "local" else config.server) for p in paths}
    runs: dict[str, list[dict]] = {p: [] for p in paths}
    for i in range(config.warmup + config.repetitions):
        k = i % len(paths)
        for path in (*paths[k:], *paths[:k]):
            result = one(configs[path], clock)
            if i >= config.warmup:
                runs[path].append(result)
    return {p: _finish(configs[p], runs[p]) for p in paths}


SERDE_CASES = (
    ("native+validate", "native", True),
    ("native", "native", False),
    ("json+validate", "json", True),
)


def run_serde_comparison(config: BenchConfig, clock: Clock = time.perf_counter_ns) -> list[BenchmarkRecord]:
    """Distributed path under native+validate, native without validation, json+validate.

    Each case runs a latency pass and a throughput pass with the same
    message count; throughput deltas are relative to native+validate.
    """
    records = []
    for label, codec, validate in SERDE_CASES:
        cfg = replace(config, series="serde", path="distributed", codec=codec, validate=validate)
        lat_runs = _repeat(cfg, lambda: _one_latency_run(cfg, clock))
        thr_runs = _repeat(cfg, lambda: _one_throughput_run(cfg, clock))
        record = _base_record(cfg, "serde", label)
        _fill_latency(record, lat_runs)
        record.throughput_mps, record.throughput_stddev_mps = mean_and_spread([r["throughput_mps"] for r in thr_runs])
        record.runs = [{"pass": "latency", **r} for r in lat_runs] + [{"pass": "throughput", **r} for r in thr_runs]
        check_record(record)
        records.append(record)
    baseline = records[0].throughput_mps
    for r in records:
        r.throughput_delta_vs_baseline = (r.throughput_mps - baseline) / baseline
    return records


def _one_stop_run(config: BenchConfig) -> dict:
    receiver = Receiver(time.perf_counter_ns)
    rig = open_rig(replace(config, path="hybrid"), receiver, stop_mode=config.stop_mode, use_consumer=False)
    assert isinstance(rig, HybridRig)
    try:
        data = payload_data(config.payload_size, config.seed)
        sent = 0
        start = time.monotonic()
        for i in range(config.messages):
            if time.monotonic() - start >= config.stop_after:
                break
            event = Event(BENCH_KEY, {"sequence": i, "data": data}, {SENT_META: str(time.perf_counter_ns())})
            rig.send(event)
            sent += 1
        remaining = config.stop_after - (time.monotonic() - start)
        if remaining > 0:
            time.sleep(remaining)
        report_a = _stop_quiet(rig.bridge_a)
        time.sleep(SETTLE)
        report_b = _stop_quiet(rig.bridge_b)
        received = receiver.count
        stats = rig.bridge_a.stats
        queued = len(rig.source.publish_queue)
    finally:
        rig.close()
    accounted = stats.exported + stats.export_failures + stats.filtered + stats.loop_suppressed + queued
    if accounted != sent:
        raise InvariantViolation(f"sent {sent} but source bridge accounts for {accounted}")
    if received > stats.exported:
        raise InvariantViolation(f"received {received} exceeds exported {stats.exported}")
    lost = queued + stats.export_failures + (stats.exported - received)
    return {
        "sent_before_stop": sent,
        "received_before_join": received,
        "estimated_lost": lost,
        "completion_rate": received / sent if sent else 1.0,
        "backlog_at_stop": report_a.backlog_at_stop,
        "delivered_after_stop": report_a.delivered_after_stop,
        "source_lost_estimate": report_a.lost_estimate,
        "sink_discarded": report_b.distributed.discarded if report_b.distributed else 0,
        "source_clean": report_a.clean,
    }


def _stop_quiet(bridge: Bridge):
    from ..errors import DrainTimeout

    try:
        return bridge.stop()
    except DrainTimeout as exc:
        logger.warning("drain deadline exceeded during stop run")
        return exc.report


def run_graceful_stop(config: BenchConfig) -> BenchmarkRecord:
    config = replace(config, series="stop", path="hybrid")
    runs = _repeat(config, lambda: _one_stop_run(config))
    record = _base_record(config, "stop")
    record.runs = runs
    record.stop_mode = config.stop_mode
    record.stop_after = config.stop_after
    record.sent_before_stop = mean_and_spread([r["sent_before_stop"] for r in runs])[0]
    record.received_before_join = mean_and_spread([r["received_before_join"] for r in runs])[0]
    record.estimated_lost = mean_and_spread([r["estimated_lost"] for r in runs])[0]
    record.completion_rate, record.completion_rate_stddev = mean_and_spread([r["completion_rate"] for r in runs])
    check_record(record)
    return record
