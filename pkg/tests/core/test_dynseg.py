# Copyright 2024 Plaseek Authors
# SPDX-License-Identifier: Apache-2.0
"""Tests for the plaseek.core.dynseg module."""
import itertools
import logging

import pytest

from plaseek.core.dynseg import (
    DimensionOracle,
    ShiftableRange,
    coarse_to_fine,
    coarse_to_fine_boundary,
    dp_segment,
    equi_partition,
    estimate_kj,
    local_optimize,
    probe_bound,
    probe_count_audit,
    score,
    segment_trajectory,
    shiftable_ranges,
    step_two_count,
)
from plaseek.core.errors import ConfigError, InstanceTooLargeError
from tests.conftest import FunctionOracle, regime_change


def test_equi_partition(subtests):
    """Tests rounded equal boundaries."""
    with subtests.test("Rounded to nearest"):
        assert equi_partition(10, 3).boundaries == [0, 3, 7, 10]

    with subtests.test("Halves round up"):
        assert equi_partition(10, 4).boundaries == [0, 3, 5, 8, 10]

    with subtests.test("One segment per position"):
        assert equi_partition(4, 4).boundaries == [0, 1, 2, 3, 4]

    with subtests.test("Invalid segment counts"):
        with pytest.raises(ConfigError):
            equi_partition(5, 0)
        with pytest.raises(ConfigError):
            equi_partition(5, 6)


def test_shiftable_ranges(subtests):
    """Tests range clipping between neighbors."""
    with subtests.test("Wide delta is clipped to disjoint ranges"):
        ranges = shiftable_ranges([0, 10, 20, 30], 100)
        assert ranges == [ShiftableRange(10, 4), ShiftableRange(20, 4)]
        assert ranges[0].hi < ranges[1].lo

    with subtests.test("Narrow delta is kept"):
        ranges = shiftable_ranges([0, 100, 200], 20)
        assert list(ranges[0].positions()) == list(range(80, 121))

    with subtests.test("Adjacent boundaries cannot move"):
        ranges = shiftable_ranges([0, 3, 5, 8, 10], 5)
        assert [r.delta for r in ranges] == [0, 0, 0]


def test_score():
    """Tests the length-weighted objective."""
    oracle = FunctionOracle(300, regime_change(140))
    result = score([0, 140, 300], oracle)
    assert result.dims == [1, 5]
    assert result.weighted_dims == 140 + 160 * 5
    assert result.objective == pytest.approx(940 / 300)
    assert result.lengths() == [140, 160]
    assert result.n_segments == 2
    assert oracle.probes == 0


def test_estimate_kj(subtests):
    """Tests the dimensionality change estimate."""
    with subtests.test("Right rank at least left rank"):
        assert estimate_kj(3, 9, 5, 4, 9, 5) == 2

    with subtests.test("Crossing with center left rank below right"):
        assert estimate_kj(3, 4, 6, 4, 5, 5) == 2

    with subtests.test("Crossing with center left rank above right"):
        assert estimate_kj(1, 6, 6, 6, 5, 5) == 5

    with subtests.test("Fallthrough"):
        assert estimate_kj(7, 7, 7, 7, 5, 3) == 4

    with subtests.test("Clamped to one"):
        assert estimate_kj(3, 3, 3, 3, 3, 3) == 1


def test_step_two_count():
    """Tests the equispaced probe count and its clamps."""
    assert step_two_count(4, 50) == 18
    assert step_two_count(1, 1) == 0
    assert step_two_count(100, 2) == 3
    assert step_two_count(5, 0) == 0
    assert probe_bound(4, 50) == pytest.approx(82.0)


def test_coarse_to_fine_boundary(subtests):
    """Tests single-boundary detection."""
    with subtests.test("Constant rank keeps the center"):
        oracle = FunctionOracle(100, lambda t_i, t_j: 3)
        chosen = coarse_to_fine_boundary(
            0, ShiftableRange(50, 8), 100, oracle
        )
        assert chosen == 50
        # Three edge positions plus u = 2 equispaced ones, two ranks each.
        assert oracle.probes == 10

    with subtests.test("Finds the change position"):
        oracle = FunctionOracle(300, regime_change(140))
        chosen = coarse_to_fine_boundary(
            0, ShiftableRange(150, 20), 300, oracle
        )
        assert chosen == 140
        assert oracle.probes < 2 * 41

    with subtests.test("Zero-width range"):
        oracle = FunctionOracle(300, regime_change(140))
        chosen = coarse_to_fine_boundary(
            0, ShiftableRange(150, 0), 300, oracle
        )
        assert chosen == 150


def test_methods_find_the_change(subtests):
    """Tests that every optimizing method moves the boundary to 140."""
    for method in ("local", "coarse", "dp"):
        with subtests.test("Method", method=method):
            oracle = FunctionOracle(300, regime_change(140))
            result = segment_trajectory(method, 2, 20, oracle)
            assert result.boundaries == [0, 140, 300]
            assert result.weighted_dims == 940

    with subtests.test("No optimization keeps the equi-partition"):
        oracle = FunctionOracle(300, regime_change(140))
        result = segment_trajectory("none", 2, 20, oracle)
        assert result.boundaries == [0, 150, 300]
        assert result.weighted_dims == 150 * 6 + 150 * 5
        assert result.probes == 0


def test_local_optimize_oracle_calls():
    """Tests that the local scan probes every range position twice."""
    oracle = FunctionOracle(300, regime_change(140))
    result = local_optimize(equi_partition(300, 2), 20, oracle)
    assert result.probes == 2 * 41
    assert oracle.probes == 2 * 41


def test_coarse_to_fine_oracle_savings():
    """Tests that coarse-to-fine needs far fewer probes on wide ranges."""
    rank = regime_change(1400)
    local = probe_count_audit("local", 2, 400, FunctionOracle(3000, rank))
    coarse_oracle = FunctionOracle(3000, rank)
    coarse = coarse_to_fine(equi_partition(3000, 2), 400, coarse_oracle)
    assert coarse.boundaries == [0, 1400, 3000]
    assert local == 2 * 801
    assert coarse.probes < local / 5


def test_dp_segment(subtests):
    """Tests the exact minimizer."""

    def rank(t_i: int, t_j: int) -> int:
        return 1 + (7 * t_i + 3 * t_j) % 4

    initial = equi_partition(40, 4)
    ranges = shiftable_ranges(initial.boundaries, 3)

    with subtests.test("Matches exhaustive enumeration"):
        oracle = FunctionOracle(40, rank)
        result = dp_segment(40, 4, 3, oracle)
        best = min(
            score([0, *inner, 40], oracle).weighted_dims
            for inner in itertools.product(*(r.positions() for r in ranges))
        )
        assert result.weighted_dims == best
        assert all(
            r.lo <= t <= r.hi for r, t in zip(ranges, result.boundaries[1:-1])
        )

    with subtests.test("Probe count"):
        oracle = FunctionOracle(40, rank)
        result = dp_segment(40, 4, 3, oracle)
        assert result.probes == 7 + 7 * 7 + 7 * 7 + 7
        assert result.probes <= 4 * (2 * 3 + 1) ** 2

    with subtests.test("Never worse than the heuristics"):
        for method in ("none", "local", "coarse"):
            other = segment_trajectory(method, 4, 3, FunctionOracle(40, rank))
            exact = segment_trajectory("dp", 4, 3, FunctionOracle(40, rank))
            assert exact.weighted_dims <= other.weighted_dims

    with subtests.test("Instance guard"):
        with pytest.raises(InstanceTooLargeError):
            dp_segment(100_000, 100, 200, FunctionOracle(100_000, rank))


def test_segment_trajectory_clamps_segments(caplog):
    """Tests that more segments than positions are reduced with a warning."""
    oracle = FunctionOracle(5, lambda t_i, t_j: 1)
    with caplog.at_level(logging.WARNING):
        result = segment_trajectory("none", 8, 2, oracle)
    assert result.boundaries == [0, 1, 2, 3, 4, 5]
    assert "8 segments requested for 5 positions" in caplog.text


def test_methods_on_real_trajectory(two_regime_prefix, subtests):
    """Tests method ordering with ranks from covariance sums."""
    oracle = DimensionOracle(two_regime_prefix, 0.9)

    with subtests.test("Pure regimes"):
        assert oracle.dimension(0, 140) == 1
        assert oracle.dimension(140, 300) >= 2
        assert oracle.probes == 0

    results = {
        method: segment_trajectory(method, 2, 20, oracle)
        for method in ("none", "local", "coarse", "dp")
    }

    with subtests.test("Boundaries stay ordered"):
        for result in results.values():
            assert result.boundaries[0] == 0
            assert result.boundaries[-1] == 300
            assert 130 <= result.boundaries[1] <= 170

    with subtests.test("Optimizers never worsen the objective"):
        none = results["none"].weighted_dims
        assert results["local"].weighted_dims <= none
        assert results["coarse"].weighted_dims <= none
        assert results["dp"].weighted_dims <= results["local"].weighted_dims
        assert results["dp"].weighted_dims <= results["coarse"].weighted_dims

    with subtests.test("Probes are counted"):
        assert results["local"].probes == 2 * 41
        assert oracle.probes == sum(r.probes for r in results.values())
