import pytest
from hypothesis import given
from hypothesis import strategies as st

from hybridfabric.bench.records import CSV_COLUMNS, BenchConfig, BenchmarkRecord, dumps_records, loads_records

floats = st.one_of(st.none(), st.floats(allow_nan=False, allow_infinity=False))
records = st.builds(
    BenchmarkRecord,
    series=st.sampled_from(["latency", "throughput", "serde", "stop"]),
    path=st.sampled_from(["local", "distributed", "hybrid"]),
    payload_size=st.integers(1, 4096),
    messages=st.integers(1, 10**6),
    repetitions=st.integers(1, 5),
    warmup=st.integers(0, 2),
    codec=st.sampled_from(["native", "json"]),
    validate=st.booleans(),
    transport=st.sampled_from(["loopback", "nats://127.0.0.1:4222"]),
    case=st.sampled_from(["", "json+validate"]),
    mean_latency_us=floats,
    p99_us=floats,
    throughput_mps=floats,
    validator_calls_publish=st.one_of(st.none(), st.integers(0, 10**6)),
    stop_mode=st.sampled_from([None, "abrupt", "drain"]),
    completion_rate=floats,
    runs=st.lists(st.fixed_dictionaries({"mean_us": st.floats(0, 1e6), "delivered": st.integers(0, 10)}), max_size=3),
)


@pytest.mark.parametrize("fmt", ["json", "csv"])
@given(rs=st.lists(records, max_size=4))
def test_round_trip(fmt, rs):
    assert loads_records(dumps_records(rs, fmt), fmt) == rs


def test_csv_header_order():
    text = dumps_records([], "csv")
    assert text.strip().split(",") == CSV_COLUMNS
    assert CSV_COLUMNS[:3] == ["series", "path", "payload_size"]


@pytest.mark.parametrize(
    "kw",
    [
        {"payload_size": 0},
        {"repetitions": 0},
        {"messages": 0},
        {"path": "carrier-pigeon"},
        {"codec": "xml"},
        {"stop_mode": "pause"},
    ],
)
def test_config_invariants(kw):
    with pytest.raises(ValueError):
        BenchConfig(**kw)
