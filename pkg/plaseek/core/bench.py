# Copyright 2024 Plaseek Authors
# SPDX-License-Identifier: Apache-2.0
"""Benchmark harness comparing search modes on one index.

Every query is searched at every threshold in every mode. Match sets must
agree across modes; the harness raises instead of reporting when they do
not. Wall times are the minimum over `repeats` runs.
"""
import logging
import time
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np
import ray

from plaseek.core.errors import InvariantViolation
from plaseek.core.index_io import PLIndex
from plaseek.core.search import search
from plaseek.models.results_schema import BenchResult, SearchReport

logger = logging.getLogger(__name__)

BENCH_MODES = ("bruteforce", "tas", "proposed", "projected")

# Distances of matching positions may differ by this relative amount
_DISTANCE_RTOL = 1e-6


def timed_search(
    index: PLIndex, query: np.ndarray, theta: float, mode: str, repeats: int
) -> Tuple[SearchReport, float]:
    """Runs one mode `repeats` times; returns the report and fastest time."""
    best = float("inf")
    report = None
    for _ in range(max(1, repeats)):
        began = time.perf_counter()
        report = search(index, query, theta, mode)  # type: ignore[arg-type]
        best = min(best, time.perf_counter() - began)
    assert report is not None
    return report, max(best, 1e-9)


def compare_matches(reference: SearchReport, other: SearchReport) -> None:
    """Checks two reports return the same positions and distances.

    Raises:
        InvariantViolation: on any difference
    """
    ref = {m.position: m.distance for m in reference.matches}
    got = {m.position: m.distance for m in other.matches}
    if ref.keys() != got.keys():
        missing = sorted(ref.keys() - got.keys())[:5]
        extra = sorted(got.keys() - ref.keys())[:5]
        raise InvariantViolation(
            f"{other.mode} disagrees with {reference.mode}: missing "
            f"{missing}, extra {extra}."
        )
    for position, distance in ref.items():
        if not np.isclose(got[position], distance, rtol=_DISTANCE_RTOL):
            raise InvariantViolation(
                f"{other.mode} distance {got[position]} at {position} "
                f"differs from {reference.mode} distance {distance}."
            )


def bench_query(
    index: PLIndex,
    name: str,
    query: np.ndarray,
    theta: float,
    modes: Sequence[str] = BENCH_MODES,
    repeats: int = 1,
) -> BenchResult:
    """Benchmarks every mode on one query at one threshold.

    Raises:
        InvariantViolation: if the modes disagree on the match set
    """
    reports = {}
    seconds = {}
    for mode in modes:
        reports[mode], seconds[mode] = timed_search(
            index, query, theta, mode, repeats
        )
    reference = reports[modes[0]]
    for mode in modes[1:]:
        compare_matches(reference, reports[mode])

    speed_up = 1.0
    if "tas" in seconds and "proposed" in seconds:
        speed_up = seconds["tas"] / seconds["proposed"]
    logger.info(
        "%s at theta=%g: %d matches, speed-up %.2f.",
        name,
        theta,
        len(reference.matches),
        speed_up,
    )
    return BenchResult(
        query=name,
        theta=theta,
        matches=len(reference.matches),
        seconds=seconds,
        counters={mode: report.counters for mode, report in reports.items()},
        speed_up=speed_up,
    )


@ray.remote
def _bench_query_remote(
    index: PLIndex,
    name: str,
    query: np.ndarray,
    theta: float,
    modes: Sequence[str],
    repeats: int,
) -> BenchResult:
    return bench_query(index, name, query, theta, modes, repeats)


def run_bench(
    index: PLIndex,
    queries: Dict[str, np.ndarray],
    thetas: Sequence[float],
    modes: Sequence[str] = BENCH_MODES,
    threads: int = 1,
    repeats: int = 1,
) -> List[BenchResult]:
    """Benchmarks every query at every threshold.

    With more than one thread, queries run as ray tasks sharing one copy of
    the index.

    Raises:
        InvariantViolation: if any query's modes disagree
    """
    jobs = [(name, theta) for name in sorted(queries) for theta in thetas]
    if threads <= 1:
        return [
            bench_query(index, name, queries[name], theta, modes, repeats)
            for name, theta in jobs
        ]

    ray.shutdown()
    ray.init(num_cpus=threads, include_dashboard=False)
    try:
        shared = ray.put(index)
        futures = [
            _bench_query_remote.remote(
                shared, name, queries[name], theta, modes, repeats
            )
            for name, theta in jobs
        ]
        try:
            return ray.get(futures)
        except ray.exceptions.RayTaskError as err:
            cause = err.as_instanceof_cause()
            if isinstance(cause, InvariantViolation):
                raise InvariantViolation(str(cause)) from err
            raise
    finally:
        ray.shutdown()


def bench_records(results: List[BenchResult]) -> List[Dict[str, Any]]:
    """Flattens results into CSV rows, one per query and threshold."""
    records = []
    for result in results:
        row: Dict[str, Any] = {
            "query": result.query,
            "theta": result.theta,
            "matches": result.matches,
            "speed_up": result.speed_up,
        }
        for mode, seconds in result.seconds.items():
            row[f"{mode}_seconds"] = seconds
        for mode, counters in result.counters.items():
            for key, value in counters.model_dump().items():
                row[f"{mode}_{key}"] = value
        records.append(row)
    return records
