# Copyright 2024 Plaseek Authors
# SPDX-License-Identifier: Apache-2.0
"""Tests for the plaseek.core.bench module."""
import pytest

from plaseek.core.bench import (
    BENCH_MODES,
    bench_query,
    bench_records,
    compare_matches,
    run_bench,
    timed_search,
)
from plaseek.core.errors import InvariantViolation
from plaseek.models.results_schema import Match, SearchReport


def _report(mode, *matches):
    return SearchReport(
        mode=mode,
        matches=[Match(position=p, distance=d) for p, d in matches],
    )


def test_compare_matches(subtests):
    """Tests match-set comparison between modes."""
    reference = _report("bruteforce", (4, 1.0), (9, 2.0))

    with subtests.test("Equal sets pass"):
        compare_matches(reference, _report("tas", (4, 1.0), (9, 2.0)))

    with subtests.test("Missing position"):
        with pytest.raises(InvariantViolation, match="missing \\[9\\]"):
            compare_matches(reference, _report("proposed", (4, 1.0)))

    with subtests.test("Extra position"):
        with pytest.raises(InvariantViolation, match="extra \\[12\\]"):
            compare_matches(
                reference,
                _report("proposed", (4, 1.0), (9, 2.0), (12, 3.0)),
            )

    with subtests.test("Different distance"):
        with pytest.raises(InvariantViolation):
            compare_matches(reference, _report("tas", (4, 1.0), (9, 2.5)))


def test_timed_search(small_index, small_corpus):
    """Tests that repeats keep the report and a positive time."""
    report, seconds = timed_search(
        small_index, small_corpus.queries[0], 10.0, "tas", repeats=3
    )
    assert report.mode == "tas"
    assert seconds > 0.0


def test_bench_query(small_index, small_corpus):
    """Tests one benchmark row over every mode."""
    result = bench_query(
        small_index, "query_000", small_corpus.queries[0], 0.0
    )
    assert result.query == "query_000"
    assert result.matches >= 2
    assert set(result.seconds) == set(BENCH_MODES)
    assert set(result.counters) == set(BENCH_MODES)
    assert result.speed_up == pytest.approx(
        result.seconds["tas"] / result.seconds["proposed"]
    )


def test_run_bench(small_index, small_corpus, subtests):
    """Tests the serial harness and its CSV records."""
    queries = {
        "query_001": small_corpus.queries[1],
        "query_000": small_corpus.queries[0],
    }
    results = run_bench(
        small_index, queries, [0.0, 40.0], modes=("tas", "proposed")
    )

    with subtests.test("One result per query and threshold"):
        assert [(r.query, r.theta) for r in results] == [
            ("query_000", 0.0),
            ("query_000", 40.0),
            ("query_001", 0.0),
            ("query_001", 40.0),
        ]

    with subtests.test("Flat records"):
        records = bench_records(results)
        assert len(records) == 4
        row = records[0]
        assert row["query"] == "query_000"
        assert row["tas_seconds"] > 0.0
        assert row["proposed_full_distance_evaluations"] >= row["matches"]
        assert "tas_frames_skipped" in row

    with subtests.test("Speed-up defaults to 1 without both timed modes"):
        (result,) = run_bench(
            small_index,
            {"query_000": small_corpus.queries[0]},
            [10.0],
            modes=("bruteforce", "tas"),
        )
        assert result.speed_up == 1.0


@pytest.mark.slow
def test_run_bench_ray(small_index, small_corpus):
    """Tests that ray workers return the serial results."""
    queries = {
        "query_000": small_corpus.queries[0],
        "query_001": small_corpus.queries[1],
    }
    serial = run_bench(small_index, queries, [30.0], modes=("tas", "proposed"))
    parallel = run_bench(
        small_index, queries, [30.0], modes=("tas", "proposed"), threads=2
    )
    assert [(r.query, r.matches) for r in parallel] == [
        (r.query, r.matches) for r in serial
    ]
