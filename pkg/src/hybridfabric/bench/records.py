"""Benchmark configuration, result records and their JSON/CSV forms."""

from __future__ import annotations

import csv
import io
import json
from collections.abc import Iterable
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

SERIES = ("latency", "throughput", "serde", "stop")
PATHS = ("local", "distributed", "hybrid")

DESK_PRESET = {"latency": 1_000, "throughput": 10_000, "serde": 1_000, "stop": 20_000}
FULL_PRESET = {"latency": 3_000, "throughput": 50_000, "serde": 3_000, "stop": 100_000}
DESK_STOP_AFTER = 0.5
FULL_STOP_AFTER = 2.0
PAYLOAD_SIZES = (256, 1024, 4096)


@dataclass
class BenchConfig:
    series: str = "latency"
    path: str = "local"
    payload_size: int = 256
    messages: int = DESK_PRESET["latency"]
    repetitions: int = 3
    warmup: int = 1
    codec: str = "native"
    validate: bool = True
    stop_after: float = DESK_STOP_AFTER
    stop_mode: str = "abrupt"
    drain_deadline: float = 10.0
    server: str | None = None  # None selects the in-memory loopback transport
    output_format: str = "json"
    output: str | None = None
    seed: int = 1234
    timeout: float = 60.0

    def __post_init__(self) -> None:
        if self.series not in SERIES:
            raise ValueError(f"series must be one of {SERIES}")
        if self.path not in PATHS:
            raise ValueError(f"path must be one of {PATHS}")
        if self.payload_size <= 0:
            raise ValueError("payload_size must be > 0")
        if self.messages < 1:
            raise ValueError("messages must be >= 1")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if self.warmup < 0:
            raise ValueError("warmup must be >= 0")
        if self.codec not in ("native", "json"):
            raise ValueError("codec must be native or json")
        if self.stop_mode not in ("abrupt", "drain"):
            raise ValueError("stop_mode must be abrupt or drain")
        if self.output_format not in ("json", "csv"):
            raise ValueError("output_format must be json or csv")

    @property
    def transport(self) -> str:
        return self.server or "loopback"

    def echo(self) -> dict[str, Any]:
        d = asdict(self)
        d.pop("output", None)
        d.pop("output_format", None)
        return d


@dataclass
class BenchmarkRecord:
    """One run's configuration echo and results.

    ``mean_latency_us``/``latency_stddev_us`` are the mean and spread of the
    per-repetition means; ``within_run_stddev_us`` averages each
    repetition's own sample spread.  Percentiles and max come from the
    recorded repetitions (mean of per-repetition p95/p99, overall max).
    """

    series: str
    path: str
    payload_size: int
    messages: int
    repetitions: int
    warmup: int
    codec: str
    validate: bool
    transport: str
    case: str = ""
    mean_latency_us: float | None = None
    latency_stddev_us: float | None = None
    within_run_stddev_us: float | None = None
    p95_us: float | None = None
    p99_us: float | None = None
    max_us: float | None = None
    throughput_mps: float | None = None
    throughput_stddev_mps: float | None = None
    throughput_delta_vs_baseline: float | None = None
    validator_calls_publish: int | None = None
    validator_calls_consume: int | None = None
    stop_mode: str | None = None
    stop_after: float | None = None
    sent_before_stop: float | None = None
    received_before_join: float | None = None
    estimated_lost: float | None = None
    completion_rate: float | None = None
    completion_rate_stddev: float | None = None
    runs: list[dict[str, Any]] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> BenchmarkRecord:
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in names})


CSV_COLUMNS = [f.name for f in fields(BenchmarkRecord)]
_INT_COLUMNS = {"payload_size", "messages", "repetitions", "warmup", "validator_calls_publish", "validator_calls_consume"}
_STR_COLUMNS = {"series", "path", "codec", "transport", "case", "stop_mode"}


def _csv_cell(name: str, value: Any) -> str:
    if value is None:
        return ""
    if name == "runs":
        return json.dumps(value, separators=(",", ":"))
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _csv_parse(name: str, text: str) -> Any:
    if name == "runs":
        return json.loads(text) if text else []
    if name == "validate":
        return text == "true"
    if name in _STR_COLUMNS:
        return text if text or name in ("case",) else None
    if text == "":
        return None
    if name in _INT_COLUMNS:
        return int(text)
    return float(text)


def dumps_records(records: Iterable[BenchmarkRecord], fmt: str = "json") -> str:
    records = list(records)
    if fmt == "json":
        return "".join(json.dumps(r.to_dict(), sort_keys=False) + "\n" for r in records)
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in records:
            d = r.to_dict()
            writer.writerow([_csv_cell(c, d[c]) for c in CSV_COLUMNS])
        return buf.getvalue()
    raise ValueError(f"unknown format {fmt!r}")


def loads_records(text: str, fmt: str = "json") -> list[BenchmarkRecord]:
    if fmt == "json":
        return [BenchmarkRecord.from_dict(json.loads(line)) for line in text.splitlines() if line.strip()]
    if fmt == "csv":
        reader = csv.DictReader(io.StringIO(text))
        if reader.fieldnames != CSV_COLUMNS:
            raise ValueError("unexpected CSV header")
        return [BenchmarkRecord.from_dict({k: _csv_parse(k, v) for k, v in row.items()}) for row in reader]
    raise ValueError(f"unknown format {fmt!r}")


def write_records(records: Iterable[BenchmarkRecord], path: str | Path, fmt: str = "json") -> None:
    Path(path).write_text(dumps_records(records, fmt), encoding="utf-8")


def read_records(path: str | Path, fmt: str = "json") -> list[BenchmarkRecord]:
    return loads_records(Path(path).read_text(encoding="utf-8"), fmt)
