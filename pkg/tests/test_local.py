import threading
import time

import pytest
from hypothesis import given
from hypothesis import strategies as st

from hybridfabric import Event, MalformedPattern, PubSubContext, QueueFull, UnknownHandle, make_key, parse_key
from hybridfabric.errors import QueueClosed
from hybridfabric.queues import BLOCK, BoundedQueue


def ev(full_key, payload=None):
    return Event(parse_key(full_key), payload)


def test_handler_subscription_is_invoked_directly():
    ctx = PubSubContext()
    seen = []
    ctx.subscribe("a.b.c.d", seen.append)
    summary = ctx.publish_local(ev("a.b.c.d"))
    assert summary == (1, 0)
    assert len(seen) == 1 and seen[0].key.full_key == "a.b.c.d"
    assert len(ctx.subscription_queue) == 0


def test_handler_runs_on_publishing_thread():
    ctx = PubSubContext()
    threads = []
    ctx.subscribe("a.>", lambda e: threads.append(threading.current_thread()))
    ctx.publish_local(ev("a.b.c.d"))
    assert threads == [threading.current_thread()]


def test_queue_subscription_enqueues():
    ctx = PubSubContext()
    ctx.subscribe("a.*.c.>")
    assert ctx.publish_local(ev("a.x.c.d.q")) == (0, 1)
    assert len(ctx.subscription_queue) == 1
    assert ctx.poll().key.full_key == "a.x.c.d.q"


def test_no_match_leaves_queues_untouched():
    ctx = PubSubContext()
    ctx.subscribe("z.>")
    assert ctx.publish_local(ev("a.b.c.d")) == (0, 0)
    assert len(ctx.subscription_queue) == 0 and len(ctx.publish_queue) == 0


def test_overlapping_queue_subscriptions_each_get_a_copy():
    ctx = PubSubContext()
    ctx.subscribe("a.>")
    ctx.subscribe("a.b.*.d")
    ctx.subscribe("a.b.c.d")
    assert ctx.publish_local(ev("a.b.c.d")) == (0, 3)
    assert len(ctx.subscription_queue) == 3


def test_malformed_subscription():
    with pytest.raises(MalformedPattern):
        PubSubContext().subscribe("a.>.b")


def test_unsubscribe():
    ctx = PubSubContext()
    h = ctx.subscribe("a.>")
    ctx.unsubscribe(h)
    assert ctx.publish_local(ev("a.b.c.d")) == (0, 0)
    with pytest.raises(UnknownHandle):
        ctx.unsubscribe(h)


def test_unsubscribe_one_of_two_overlapping():
    ctx = PubSubContext()
    seen = []
    h1 = ctx.subscribe("a.>", seen.append)
    ctx.subscribe("a.b.c.d", seen.append)
    ctx.publish_local(ev("a.b.c.d"))
    ctx.unsubscribe(h1)
    assert ctx.publish_local(ev("a.b.c.d")) == (1, 0)
    assert len(seen) == 3


def test_handler_error_does_not_block_other_subscribers(caplog):
    ctx = PubSubContext()
    seen = []

    def boom(e):
        raise RuntimeError("boom")

    ctx.subscribe("a.>", boom)
    ctx.subscribe("a.>", seen.append)
    ctx.subscribe("a.>")
    assert ctx.publish_local(ev("a.b.c.d")) == (2, 1)
    assert len(seen) == 1 and ctx.handler_errors == 1


def test_poll_fifo_and_timeout():
    ctx = PubSubContext()
    ctx.subscribe(">")
    e1, e2 = ev("a.b.c.d", 1), ev("a.b.c.d", 2)
    ctx.publish_local(e1)
    ctx.publish_local(e2)
    assert ctx.poll() is e1
    assert ctx.poll() is e2
    t0 = time.monotonic()
    assert ctx.poll(0.01) is None
    assert time.monotonic() - t0 >= 0.01


def test_poll_wakes_on_concurrent_enqueue():
    ctx = PubSubContext()
    ctx.subscribe(">")
    target = ev("a.b.c.d")
    timer = threading.Timer(0.05, ctx.publish_local, args=(target,))
    t0 = time.monotonic()
    timer.start()
    got = ctx.poll(2.0)
    elapsed = time.monotonic() - t0
    assert got is target
    assert 0.04 <= elapsed < 1.0


def test_publish_for_export_reject_policy():
    ctx = PubSubContext(publish_capacity=8)
    ctx.publish_for_export(ev("a.b.c.d"))
    assert len(ctx.publish_queue) == 1
    for _ in range(7):
        ctx.publish_for_export(ev("a.b.c.d"))
    with pytest.raises(QueueFull):
        ctx.publish_for_export(ev("a.b.c.d"))


def test_publish_for_export_block_policy_waits_for_space():
    ctx = PubSubContext(publish_capacity=2, publish_policy=BLOCK)
    ctx.publish_for_export(ev("a.b.c.d", 0))
    ctx.publish_for_export(ev("a.b.c.d", 1))
    done = threading.Event()
    finished_at = []

    def producer():
        ctx.publish_for_export(ev("a.b.c.d", 2))
        finished_at.append(time.monotonic())
        done.set()

    threading.Thread(target=producer, daemon=True).start()
    time.sleep(0.1)
    assert not done.is_set()
    released_at = time.monotonic()
    assert ctx.publish_queue.get().payload == 0
    assert done.wait(2.0)
    assert finished_at[0] >= released_at
    assert [ctx.publish_queue.get().payload for _ in range(2)] == [1, 2]


def test_subscription_queue_full_reports_partial_summary():
    ctx = PubSubContext(subscription_capacity=1)
    seen = []
    ctx.subscribe("a.>")
    ctx.subscribe("a.>")
    ctx.subscribe("a.>", seen.append)
    with pytest.raises(QueueFull) as info:
        ctx.publish_local(ev("a.b.c.d"))
    assert info.value.summary == (1, 1)
    assert len(seen) == 1


def test_fresh_context_is_empty():
    ctx = PubSubContext()
    assert ctx.subscriptions == () and len(ctx.publish_queue) == 0 and len(ctx.subscription_queue) == 0


@given(st.lists(st.integers(), max_size=50))
def test_single_producer_fifo(values):
    ctx = PubSubContext()
    ctx.subscribe("a.>")
    key = make_key("a", "b", "c", "d")
    for v in values:
        ctx.publish_local(Event(key, v))
    assert [ctx.poll().payload for _ in values] == values


def test_concurrent_producers_and_consumers():
    ctx = PubSubContext(subscription_capacity=64, subscription_policy=BLOCK)
    ctx.subscribe("a.>")
    n_prod, per = 4, 500
    got = []
    lock = threading.Lock()

    def produce(pid):
        key = make_key("a", "b", "c", "d", [f"p{pid}"])
        for i in range(per):
            ctx.publish_local(Event(key, (pid, i)))

    def consume():
        while True:
            e = ctx.poll(0.5)
            if e is None:
                return
            with lock:
                got.append(e.payload)

    consumers = [threading.Thread(target=consume) for _ in range(3)]
    producers = [threading.Thread(target=produce, args=(p,)) for p in range(n_prod)]
    for t in consumers + producers:
        t.start()
    for t in producers + consumers:
        t.join(10)
    assert sorted(got) == sorted((p, i) for p in range(n_prod) for i in range(per))


def test_bounded_queue_close_accounting():
    q = BoundedQueue(10)
    for i in range(5):
        q.put(i)
    assert q.take() == (0, False)
    assert q.close() == 4
    with pytest.raises(QueueClosed):
        q.put(99)
    assert q.take() == (1, True)
    assert q.taken_after_close == 1
    assert len(q) == 3
