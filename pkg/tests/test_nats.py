"""Integration tests against a real nats-server."""

import time

import pytest

from hybridfabric import Bridge, BridgeConfig, DistributedContext, Event, NotConnected, PubSubContext, RejectionRecord
from hybridfabric.distributed import FULL_KEY, REQUIRED_HEADERS
from hybridfabric.errors import RequestTimeout
from hybridfabric.families import CANONICAL_PAYLOADS, STATUS_UPDATE, bind
from hybridfabric.transport.nats_adapter import NatsTransport

from conftest import wait_until

pytestmark = pytest.mark.nats

KEY = bind(STATUS_UPDATE, ["node17", "10s"])
GOOD = CANONICAL_PAYLOADS[STATUS_UPDATE.base_key]


@pytest.fixture
def connect(nats_url, registry):
    opened = []

    def _connect(name="t", **kw):
        ctx = DistributedContext(NatsTransport(nats_url, name=name), registry, client_id=name, **kw).connect()
        opened.append(ctx)
        return ctx

    yield _connect
    for ctx in opened:
        ctx.stop(drain=False)


def test_connect_failure_raises_not_connected():
    with pytest.raises(NotConnected):
        NatsTransport("nats://127.0.0.1:1", connect_timeout=0.5).connect()


def test_headers_survive_the_wire(connect):
    pub, sub = connect("pub"), connect("sub")
    envs = []
    sub.transport.subscribe(">", envs.append)
    sub.transport.flush()
    pub.publish(Event(KEY, GOOD, {"cns.bridged": "x", "Trace": "T"}))
    assert wait_until(lambda: envs)
    env = envs[0]
    assert env.subject == KEY.full_key == env.headers[FULL_KEY]
    for h in REQUIRED_HEADERS:
        assert h in env.headers
    assert env.headers["CNS-cns.bridged"] == "x" and env.headers["CNS-Trace"] == "T"
    ev = sub.consume(env)
    assert ev.key == KEY and ev.payload == GOOD and ev.metadata["cns.bridged"] == "x"


def test_wildcard_routing_and_ordering(connect):
    pub, sub = connect("pub"), connect("sub")
    got, other = [], []
    sub.subscribe("fabric.*.status.>", got.append)
    sub.subscribe("fabric.node.health.>", other.append)
    sub.transport.flush()
    for i in range(200):
        pub.publish(Event(KEY, {**GOOD, "sequence": i}))
    assert wait_until(lambda: len(got) == 200)
    assert [e.payload["sequence"] for e in got] == list(range(200))
    assert other == []


def test_rejection_over_the_wire(connect):
    sub = connect("sub")
    raw = connect("raw").transport
    handle = sub.subscribe(">", lambda e: None)
    sub.transport.flush()
    raw.publish(KEY.full_key, {}, b"junk")
    assert wait_until(lambda: handle.rejected == 1)
    assert isinstance(sub.rejections[-1], RejectionRecord)


def test_request_reply(connect):
    server, client = connect("server"), connect("client")
    server.respond("fabric.node.status.>", lambda e: Event(e.key, {**e.payload, "status": "pong"}))
    server.transport.flush()
    reply = client.request(Event(KEY, GOOD), timeout=2.0)
    assert reply.payload["status"] == "pong"


def test_request_timeout_without_responder(connect):
    client = connect("client")
    t0 = time.monotonic()
    with pytest.raises(RequestTimeout):
        client.request(Event(KEY, GOOD), timeout=0.05)
    assert time.monotonic() - t0 >= 0.05


def test_drain_delivers_pending(connect):
    pub, sub = connect("pub"), connect("sub")
    got = []
    sub.subscribe(">", lambda e: (time.sleep(0.001), got.append(e)))
    sub.transport.flush()
    for i in range(300):
        pub.publish(Event(KEY, {**GOOD, "sequence": i}))
    pub.transport.flush()
    report = sub.stop()
    assert report.clean and len(got) == 300
    assert sub.stop().noop


def test_bridge_end_to_end_over_nats(nats_url, registry):
    def make(name, cfg):
        local = PubSubContext(name=name)
        dctx = DistributedContext(NatsTransport(nats_url, name=name), registry, client_id=name).connect()
        return local, Bridge(local, dctx, cfg)

    a_local, a = make("a", BridgeConfig(export_patterns=("fabric.>",), stop_mode="drain"))
    b_local, b = make("b", BridgeConfig(export_patterns=(), import_patterns=("fabric.>",), stop_mode="drain"))
    b_local.subscribe("fabric.node.status.>")
    b.start()
    b.dctx.transport.flush()
    a.start()
    for i in range(100):
        a_local.publish_for_export(Event(KEY, {**GOOD, "sequence": i}))
    a.stop()
    b.stop()
    seen = []
    while (e := b_local.poll()) is not None:
        seen.append(e.payload["sequence"])
    assert seen == list(range(100))
