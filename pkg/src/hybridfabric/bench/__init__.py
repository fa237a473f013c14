from .harness import run_graceful_stop, run_interleaved, run_latency, run_serde_comparison, run_throughput
from .records import BenchConfig, BenchmarkRecord, dumps_records, loads_records, read_records, write_records
from .stats import LatencyStats, compute_stats, nearest_rank, throughput_rate

__all__ = [
    "BenchConfig",
    "BenchmarkRecord",
    "LatencyStats",
    "compute_stats",
    "dumps_records",
    "loads_records",
    "nearest_rank",
    "read_records",
    "run_graceful_stop",
    "run_interleaved",
    "run_latency",
    "run_serde_comparison",
    "run_throughput",
    "throughput_rate",
    "write_records",
]
