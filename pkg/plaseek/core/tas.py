# Copyright 2024 Plaseek Authors
# SPDX-License-Identifier: Apache-2.0
"""Time-series active search over window histograms and its exhaustive oracle.

Adjacent window histograms differ by at most sqrt(2), so a position whose
distance exceeds the threshold by `e` rules out the next floor(e / sqrt(2))
positions.
"""
import logging
import math
from typing import Optional, Tuple

import numpy as np

from plaseek.config import PLASEEK_CONFIG
from plaseek.core.histogram import (
    STEP_BOUND,
    HistogramCursor,
    distances_to,
    histogram_distance,
    iter_histogram_chunks,
    n_positions,
    query_histogram,
)
from plaseek.models.results_schema import (
    Match,
    SearchCounters,
    SearchParams,
    SearchReport,
)

logger = logging.getLogger(__name__)


def skip_width(d: float, theta: float) -> int:
    """Number of positions to advance after observing distance `d`.

    Returns floor((d - theta) / sqrt(2)) + 1 when d > theta, else 1.
    """
    if d > theta:
        return int(math.floor((d - theta) / STEP_BOUND)) + 1
    return 1


def skip_widths(d: np.ndarray, theta: float) -> np.ndarray:
    """`skip_width` of every distance in `d`."""
    over = np.maximum(d - theta, 0.0)
    steps = np.floor(over / STEP_BOUND).astype(np.int64) + 1
    return np.where(d > theta, steps, 1)


def scan_threshold(theta: float) -> float:
    """Threshold the scans feed to `skip_width`.

    When d - theta is an exact multiple of sqrt(2), the neighbour that far
    away can sit exactly at theta. Widening theta by a relative slack keeps
    such a neighbour inside the scan.
    """
    return theta + PLASEEK_CONFIG.get("COMPRESSED_SLACK") * max(1.0, theta)


def infer_bins(stored: np.ndarray, query: np.ndarray) -> int:
    """Smallest bin count covering every codeword of both sequences."""
    return int(max(np.max(stored), np.max(query))) + 1


def tas_search(
    stored: np.ndarray,
    query: np.ndarray,
    params: SearchParams,
    n_bins: Optional[int] = None,
) -> SearchReport:
    """Scans the stored codewords with skip widths.

    Args:
        stored: stored codeword sequence
        query: query codeword sequence, truncated to its first W frames
        params: threshold and window
        n_bins: codebook size, inferred from the data when omitted

    Returns:
        Every position with distance <= theta, sorted, plus work counters.

    Raises:
        RangeError: if either sequence is shorter than the window
    """
    window = params.window
    n_bins = n_bins or infer_bins(stored, query)
    last = n_positions(len(stored), window) - 1
    x_q = query_histogram(query, window, n_bins).counts
    cursor = HistogramCursor(stored, window, n_bins)
    counters = SearchCounters()
    matches = []
    threshold = scan_threshold(params.theta)

    t = 0
    while t <= last:
        d = histogram_distance(cursor.seek(t), x_q)
        counters.full_distance_evaluations += 1
        counters.positions_visited += 1
        if d <= params.theta:
            matches.append(Match(position=t, distance=d))
        step = skip_width(d, threshold)
        counters.frames_skipped += min(step, last + 1 - t) - 1
        t += step

    logger.debug(
        "TAS: %d matches, %d distance evaluations over %d positions.",
        len(matches),
        counters.full_distance_evaluations,
        last + 1,
    )
    return SearchReport(mode="tas", matches=matches, counters=counters)


def brute_force_distances(
    stored: np.ndarray,
    query: np.ndarray,
    window: int,
    n_bins: Optional[int] = None,
) -> np.ndarray:
    """Distance d(t) at every window position of the stored sequence."""
    n_bins = n_bins or infer_bins(stored, query)
    x_q = query_histogram(query, window, n_bins).counts
    trace = np.empty(n_positions(len(stored), window))
    for start, rows in iter_histogram_chunks(stored, window, n_bins):
        trace[start : start + len(rows)] = distances_to(rows, x_q)
    return trace


def brute_force_search(
    stored: np.ndarray,
    query: np.ndarray,
    params: SearchParams,
    n_bins: Optional[int] = None,
) -> Tuple[SearchReport, np.ndarray]:
    """Evaluates every window position.

    Returns:
        The report with all matches, and the full distance trace.

    Raises:
        RangeError: if either sequence is shorter than the window
    """
    trace = brute_force_distances(stored, query, params.window, n_bins)
    hits = np.flatnonzero(trace <= params.theta)
    matches = [Match(position=int(t), distance=float(trace[t])) for t in hits]
    counters = SearchCounters(
        full_distance_evaluations=len(trace), positions_visited=len(trace)
    )
    return (
        SearchReport(mode="bruteforce", matches=matches, counters=counters),
        trace,
    )
