# Copyright 2024 Plaseek Authors
# SPDX-License-Identifier: Apache-2.0
"""Acceptance tests on hour-scale synthetic corpora.

Streams run at 100 frames per second, so an hour is 360000 frames and a
15 s query is 1500 frames. Deselect with `pytest -m "not slow"`.
"""
import itertools
import math

import numpy as np
import pytest

from plaseek.core.bench import timed_search
from plaseek.core.dynseg import (
    DimensionOracle,
    dp_segment,
    equi_partition,
    score,
    segment_trajectory,
    shiftable_ranges,
)
from plaseek.core.histogram import histogram_at, histogram_matrix
from plaseek.core.index_io import PLIndex, build_index
from plaseek.core.pla import CovariancePrefix, compress, compress_rows
from plaseek.core.runner import sweep_dimensions
from plaseek.core.sampling import block_lower_bound
from plaseek.core.search import CompressedScan, search
from plaseek.core.synthetic import CodewordCorpus, codeword_corpus
from plaseek.core.tas import (
    brute_force_distances,
    brute_force_search,
    scan_threshold,
    skip_width,
)
from plaseek.models.config_schema import IndexConfig
from plaseek.models.results_schema import SearchParams
from tests.conftest import FunctionOracle

pytestmark = pytest.mark.slow

BINS = 16
WINDOW = 200

HOUR = 360_000
HOUR_BINS = 128
QUERY = 1500


@pytest.fixture(scope="module")
def corpus() -> CodewordCorpus:
    """30000 frames with three queries planted three times each."""
    return codeword_corpus(
        seed=101,
        length=30_000,
        n_bins=BINS,
        query_length=400,
        n_queries=3,
        copies=3,
    )


@pytest.fixture(scope="module")
def rows(corpus: CodewordCorpus) -> np.ndarray:
    """Window histograms of the corpus."""
    return histogram_matrix(corpus.stored, WINDOW, BINS)


@pytest.fixture(scope="module")
def index(corpus: CodewordCorpus) -> PLIndex:
    """Index with coarse-to-fine segmentation."""
    config = IndexConfig(
        window_frames=WINDOW,
        segments=30,
        sigma=0.9,
        delta=100,
        block=20,
        dynseg="coarse",
    )
    return build_index(corpus.stored, config, BINS)


@pytest.fixture(scope="module")
def hour_corpus() -> CodewordCorpus:
    """One hour over 128 codewords, four 15 s queries planted once each.

    Regimes mix into a shared background, so unrelated windows sit a few
    hundred count units from a query instead of a thousand.
    """
    return codeword_corpus(
        seed=808,
        length=HOUR,
        n_bins=HOUR_BINS,
        query_length=QUERY,
        n_queries=4,
        copies=1,
        salience=0.3,
    )


@pytest.fixture(scope="module")
def hour_index(hour_corpus: CodewordCorpus) -> PLIndex:
    """M=300, sigma=0.9, a=50 index over the hour corpus."""
    config = IndexConfig(
        window_frames=QUERY,
        segments=300,
        sigma=0.9,
        delta=100,
        block=50,
        dynseg="coarse",
    )
    return build_index(hour_corpus.stored, config, HOUR_BINS)


def _tas_visits(trace: np.ndarray, theta: float) -> np.ndarray:
    """Positions a skip-width scan over `trace` evaluates."""
    threshold = scan_threshold(theta)
    visited = np.zeros(len(trace), dtype=bool)
    t = 0
    while t < len(trace):
        visited[t] = True
        t += skip_width(float(trace[t]), threshold)
    return visited


def test_modes_agree_on_many_instances(subtests):
    """Every mode returns the exhaustive match set on 50 hour-scale streams."""
    thetas = (0.0, 40.0, 85.0, 150.0, 300.0)
    for seed in range(50):
        generator = np.random.default_rng(seed)
        n_bins = int(generator.choice([32, 64]))
        instance = codeword_corpus(
            seed=1000 + seed,
            length=int(generator.integers(60_000, HOUR + 1)),
            n_bins=n_bins,
            query_length=QUERY,
            n_queries=1,
            copies=2,
            salience=float(generator.choice([0.3, 0.6, 1.0])),
        )
        config = IndexConfig(
            window_frames=QUERY,
            segments=int(generator.integers(20, 400)),
            sigma=float(generator.uniform(0.5, 0.99)),
            delta=int(generator.integers(0, 10)),
            block=int(generator.integers(1, 100)),
            dynseg=str(generator.choice(["none", "local", "coarse"])),
        )
        built = build_index(instance.stored, config, n_bins)
        theta = float(thetas[seed % len(thetas)])
        query = instance.queries[0]
        with subtests.test("Instance", seed=seed, theta=theta):
            expected, _ = brute_force_search(
                instance.stored,
                query,
                SearchParams(theta=theta, window=QUERY),
                n_bins,
            )
            for mode in ("proposed", "projected", "tas"):
                report = search(built, query, theta, mode)
                assert report.positions() == expected.positions()
                np.testing.assert_allclose(
                    [m.distance for m in report.matches],
                    [m.distance for m in expected.matches],
                    rtol=1e-6,
                )


def test_lower_bound_chain(index, rows, rng):
    """Block bound <= compressed distance <= histogram distance."""
    for x_q in rows[rng.integers(0, len(rows), size=5)]:
        for j, seg in enumerate(index.segments):
            y_q = compress(seg, x_q)
            features = index.features[j]
            exact = np.linalg.norm(
                rows[seg.start : seg.end].astype(np.float64) - x_q, axis=1
            )
            compressed = np.linalg.norm(features - y_q.as_vector(), axis=1)
            projected = np.linalg.norm(features[:, :-1] - y_q.z, axis=1)
            assert np.all(projected <= compressed + 1e-9)
            assert np.all(compressed <= exact + 1e-9)
        for blk in index.blocks:
            seg = index.segments[blk.segment]
            y_q = compress(seg, x_q)
            members = index.features[blk.segment][
                blk.start - seg.start : blk.end - seg.start
            ]
            compressed = np.linalg.norm(members - y_q.as_vector(), axis=1)
            assert block_lower_bound(blk, y_q) <= compressed.min() + 1e-9


def test_lower_bound_chain_across_segments(hour_index, hour_corpus, rng):
    """10^4 histogram pairs in each of 100 segments keep z <= y <= x."""
    stored = hour_corpus.stored
    starts = rng.integers(0, hour_index.n_positions, size=96)
    others = np.stack(
        [histogram_at(stored, int(t), QUERY, HOUR_BINS).counts for t in starts]
        + [
            histogram_at(query, 0, QUERY, HOUR_BINS).counts
            for query in hour_corpus.queries
        ]
    ).astype(np.float64)
    segments = np.linspace(0, len(hour_index.segments) - 1, 100).astype(int)
    pairs = 0
    for j in segments.tolist():
        seg = hour_index.segments[j]
        picks = rng.integers(seg.start, seg.end, size=100)
        x_s = np.stack(
            [
                histogram_at(stored, int(t), QUERY, HOUR_BINS).counts
                for t in picks
            ]
        ).astype(np.float64)
        y_s = hour_index.features[j][picks - seg.start]
        y_q = compress_rows(seg, others)

        exact = np.linalg.norm(x_s[:, None, :] - others[None, :, :], axis=2)
        gap = y_s[:, None, :] - y_q[None, :, :]
        compressed = np.linalg.norm(gap, axis=2)
        projected = np.linalg.norm(gap[:, :, :-1], axis=2)
        assert np.all(projected <= compressed + 1e-9)
        assert np.all(compressed <= exact + 1e-9)
        pairs += exact.size
    assert pairs >= 100 * 10_000


def test_skip_widths_never_cover_a_match(corpus):
    """Every position a skip passes over is beyond the threshold."""
    theta = 30.0
    _, trace = brute_force_search(
        corpus.stored,
        corpus.queries[0],
        SearchParams(theta=theta, window=WINDOW),
        BINS,
    )
    for t, d in enumerate(trace):
        step = skip_width(float(d), scan_threshold(theta))
        assert np.all(trace[t + 1 : t + step] > theta)
    assert np.max(np.abs(np.diff(trace))) <= math.sqrt(2.0) + 1e-12


def test_skipped_and_pruned_positions_audit(hour_index, hour_corpus, subtests):
    """Positions ruled out without an exact distance all lie beyond theta."""
    audited = 0
    for q, query in enumerate(hour_corpus.queries):
        trace = brute_force_distances(
            hour_corpus.stored, query, QUERY, HOUR_BINS
        )
        x_q = histogram_at(query, 0, QUERY, HOUR_BINS).counts
        for theta in (40.0, 85.0, 150.0):
            with subtests.test("TAS skips", q=q, theta=theta):
                visited = _tas_visits(trace, theta)
                tas = search(hour_index, query, theta, "tas")
                assert int(visited.sum()) == (
                    tas.counters.full_distance_evaluations
                )
                assert np.all(trace[~visited] > theta)

            for projected in (False, True):
                with subtests.test(
                    "Compressed scan", q=q, theta=theta, projected=projected
                ):
                    scan = CompressedScan(
                        hour_index, x_q, theta, projected, audit=True
                    )
                    scan.run()
                    assert np.all(trace[~scan.exact] > theta)
            audited += 3 * len(trace)
    assert audited >= 1_000_000


def test_average_dimension_falls_with_more_segments(hour_corpus):
    """Finer equi-partitions of an hour need fewer dimensions."""
    hour_rows = histogram_matrix(hour_corpus.stored, QUERY, HOUR_BINS)
    counts = [10, 30, 100, 300, 1000, 3000]
    records = sweep_dimensions(hour_rows, counts, [0.9])
    dims = [r["average_dimension"] for r in records]
    rises = sum(b > a for a, b in zip(dims, dims[1:]))
    assert rises <= 1
    assert dims[-1] <= HOUR_BINS / 5


def test_dynamic_segmentation(subtests):
    """Optimized boundaries beat the equi-partition at M=100, delta=200."""
    stream = codeword_corpus(
        seed=202,
        length=100_500,
        n_bins=32,
        query_length=500,
        n_queries=1,
        copies=1,
        regime_min=300,
        regime_max=2000,
    )
    prefix = CovariancePrefix(histogram_matrix(stream.stored, 500, 32))
    results = {
        method: segment_trajectory(
            method, 100, 200, DimensionOracle(prefix, 0.9)
        )
        for method in ("none", "local", "coarse")
    }

    with subtests.test("Objective"):
        none = results["none"].objective
        assert results["local"].objective <= none
        assert results["coarse"].objective <= none

    with subtests.test("Coarse-to-fine within 5% of the local scan"):
        local = results["local"].objective
        assert results["coarse"].objective <= 1.05 * local

    with subtests.test("Oracle call counts"):
        assert results["coarse"].probes < results["local"].probes


def _staircase(changes):
    """Rank grows by one per change point a range covers, plus its start."""

    def rank(t_i: int, t_j: int) -> int:
        inside = sum(t_i < c < t_j for c in changes)
        before = sum(c <= t_i for c in changes)
        return 1 + before % 3 + 2 * inside

    return rank


def test_oracle_call_scaling(subtests):
    """Oracle calls grow like delta^2, delta and sqrt(delta)."""
    length = 8000
    segments = 4
    centers = equi_partition(length, segments).boundaries[1:-1]
    rank = _staircase([c + 17 for c in centers])
    deltas = [25, 50, 100, 200, 400]
    calls = {
        method: [
            segment_trajectory(
                method, segments, delta, FunctionOracle(length, rank)
            ).probes
            for delta in deltas
        ]
        for method in ("dp", "local", "coarse")
    }
    expected = {"dp": 2.0, "local": 1.0, "coarse": 0.5}
    for method, slope in expected.items():
        with subtests.test("Log-log slope", method=method):
            fitted, _ = np.polyfit(np.log(deltas), np.log(calls[method]), 1)
            assert abs(fitted - slope) <= 0.25

    with subtests.test("Coarse-to-fine below a fifth of the local scan"):
        assert calls["coarse"][-1] < calls["local"][-1] / 5


def test_dp_matches_enumeration(subtests):
    """The exact minimizer equals enumeration on 24 tiny instances."""
    for seed in range(24):
        generator = np.random.default_rng(500 + seed)
        segments = int(generator.integers(2, 6))
        delta = int(generator.integers(1, 5))
        stream = codeword_corpus(
            seed=600 + seed,
            length=int(generator.integers(300, 600)),
            n_bins=8,
            query_length=20,
            n_queries=1,
            copies=1,
            regime_min=30,
            regime_max=120,
        )
        prefix = CovariancePrefix(histogram_matrix(stream.stored, 20, 8))
        oracle = DimensionOracle(prefix, 0.9)
        length = prefix.n_positions
        ranges = shiftable_ranges(
            equi_partition(length, segments).boundaries, delta
        )
        with subtests.test("Instance", seed=seed, M=segments, delta=delta):
            exact = dp_segment(length, segments, delta, oracle)
            best = min(
                score([0, *inner, length], oracle).weighted_dims
                for inner in itertools.product(
                    *(r.positions() for r in ranges)
                )
            )
            assert exact.weighted_dims == best
            for method in ("none", "local", "coarse"):
                other = segment_trajectory(method, segments, delta, oracle)
                assert other.weighted_dims >= exact.weighted_dims


def test_planted_copies_and_workload(index, corpus):
    """Planted copies are found with fewer exact evaluations than TAS."""
    proposed_work = 0
    tas_work = 0
    for q, query in enumerate(corpus.queries):
        proposed = search(index, query, 30.0, "proposed")
        tas = search(index, query, 30.0, "tas")
        planted = {p for k, p in corpus.occurrences if k == q}
        assert planted <= set(proposed.positions())
        proposed_work += proposed.counters.full_distance_evaluations
        tas_work += tas.counters.full_distance_evaluations
    assert proposed_work < tas_work


def test_hour_workload_against_tas(hour_index, hour_corpus, subtests):
    """On an hour, a third of the TAS evaluations in half its time."""
    theta = 85.0
    work = {"proposed": 0, "tas": 0}
    seconds = {"proposed": 0.0, "tas": 0.0}
    for q, query in enumerate(hour_corpus.queries):
        reports = {}
        for mode in work:
            reports[mode], elapsed = timed_search(
                hour_index, query, theta, mode, repeats=3
            )
            work[mode] += reports[mode].counters.full_distance_evaluations
            seconds[mode] += elapsed
        with subtests.test("Same matches", q=q):
            assert reports["proposed"].matches == reports["tas"].matches
            planted = {p for k, p in hour_corpus.occurrences if k == q}
            assert planted <= set(reports["proposed"].positions())

    with subtests.test("Full-distance evaluations"):
        assert work["proposed"] * 3 <= work["tas"]

    with subtests.test("Wall time"):
        assert seconds["proposed"] * 2 <= seconds["tas"]
