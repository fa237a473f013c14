"""Summary statistics for latency samples."""

from __future__ import annotations

import math
from collections.abc import Sequence
from typing import NamedTuple

from ..errors import EmptySamples


class LatencyStats(NamedTuple):
    mean: float
    stddev: float
    p95: float
    p99: float
    max: float


def nearest_rank(sorted_samples: Sequence[float], q: float) -> float:
    """Value at 1-based rank ceil(q*n) of an ascending sequence."""
    n = len(sorted_samples)
    if n == 0:
        raise EmptySamples("no samples")
    # round() guards against q*n landing a hair above an integer
    rank = max(1, math.ceil(round(q * n, 9)))
    return sorted_samples[min(rank, n) - 1]


def compute_stats(samples: Sequence[float]) -> LatencyStats:
    """Mean, population standard deviation, nearest-rank p95/p99, and max."""
    if len(samples) == 0:
        raise EmptySamples("cannot summarise an empty sample")
    ordered = sorted(samples)
    n = len(ordered)
    mean = math.fsum(ordered) / n
    var = math.fsum((x - mean) ** 2 for x in ordered) / n
    return LatencyStats(
        mean=mean,
        stddev=math.sqrt(var),
        p95=nearest_rank(ordered, 0.95),
        p99=nearest_rank(ordered, 0.99),
        max=ordered[-1],
    )


def throughput_rate(delivered: int, elapsed_s: float) -> float:
    if elapsed_s <= 0:
        raise ValueError("elapsed time must be positive")
    return delivered / elapsed_s


def mean_and_spread(values: Sequence[float]) -> tuple[float, float]:
    """Mean and population standard deviation across repetition values."""
    if not values:
        raise EmptySamples("no values")
    m = math.fsum(values) / len(values)
    return m, math.sqrt(math.fsum((v - m) ** 2 for v in values) / len(values))
