import math
import statistics

import pytest
from hypothesis import given
from hypothesis import strategies as st

from hybridfabric.bench.stats import compute_stats, mean_and_spread, nearest_rank, throughput_rate
from hybridfabric.errors import EmptySamples


def test_mean_of_three():
    assert compute_stats([1, 2, 3]).mean == 2.0


def test_nearest_rank_on_1_to_100():
    s = compute_stats(list(range(1, 101)))
    assert s.p95 == 95 and s.p99 == 99 and s.max == 100


def test_single_sample():
    assert compute_stats([7]) == (7.0, 0.0, 7, 7, 7)


def test_constant_samples_have_zero_spread():
    assert compute_stats([5.0] * 40).stddev == 0.0


def test_empty():
    with pytest.raises(EmptySamples):
        compute_stats([])


def test_throughput_rate():
    assert throughput_rate(1000, 0.5) == 2000.0
    with pytest.raises(ValueError):
        throughput_rate(10, 0)


def test_rank_for_ten_samples():
    # ceil(0.95*10) = 10, ceil(0.99*10) = 10
    data = list(range(10, 110, 10))
    assert nearest_rank(data, 0.95) == 100 and nearest_rank(data, 0.5) == 50


@given(st.lists(st.floats(0, 1e6), min_size=1, max_size=200))
def test_properties(samples):
    s = compute_stats(samples)
    ordered = sorted(samples)
    assert s.p95 <= s.p99 <= s.max
    assert s.mean <= s.max + 1e-6
    assert math.isclose(s.stddev, statistics.pstdev(samples), rel_tol=1e-9, abs_tol=1e-6)
    assert s.p95 == ordered[math.ceil(0.95 * len(ordered) - 1e-9) - 1]


def test_mean_and_spread():
    assert mean_and_spread([1.0, 3.0]) == (2.0, 1.0)
