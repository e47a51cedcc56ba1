# Copyright 2024 Plaseek Authors
# SPDX-License-Identifier: Apache-2.0
"""Codeword histograms over W-frame windows.

Counts are kept as integers. Distances are computed from exact integer
squared differences, so every search mode sees bit-identical values.
"""
import math
from dataclasses import dataclass
from typing import Iterator, Tuple

import numpy as np

from plaseek.config import PLASEEK_CONFIG
from plaseek.core.errors import ConsistencyError, RangeError, ShapeError

# Largest distance change between adjacent window positions
STEP_BOUND = math.sqrt(2.0)

# Cursor moves up to this many frames slide one codeword at a time
_SLIDE_FRAMES = 8


@dataclass(frozen=True)
class Histogram:
    """Codeword counts of one window."""

    counts: np.ndarray
    window: int

    @property
    def n_bins(self) -> int:
        """Number of codewords n."""
        return int(self.counts.shape[0])


def n_positions(length: int, window: int) -> int:
    """Number of window positions L - W + 1 of a sequence.

    Raises:
        RangeError: if the sequence is shorter than the window
    """
    if window < 1:
        raise RangeError("Window must be at least one frame.")
    if length < window:
        raise RangeError(
            f"Sequence of {length} frames is shorter than window {window}."
        )
    return length - window + 1


def histogram_at(
    codes: np.ndarray, t: int, window: int, n_bins: int
) -> Histogram:
    """Counts codewords in frames [t, t + window).

    Raises:
        RangeError: if the window exceeds the sequence
    """
    if t < 0 or t + window > len(codes):
        raise RangeError(
            f"Window [{t}, {t + window}) exceeds sequence of {len(codes)}."
        )
    counts = np.bincount(codes[t : t + window], minlength=n_bins)
    return Histogram(counts=counts.astype(np.int64), window=window)


def query_histogram(
    query: np.ndarray, window: int, n_bins: int
) -> Histogram:
    """Histogram of the first `window` frames of a query.

    Raises:
        RangeError: if the query is shorter than the window
    """
    if len(query) < window:
        raise RangeError(
            f"Query of {len(query)} frames is shorter than window {window}."
        )
    return histogram_at(query, 0, window, n_bins)


def slide(h: Histogram, out_code: int, in_code: int) -> Histogram:
    """Moves the window one frame: drops `out_code`, adds `in_code`.

    Raises:
        ConsistencyError: if bin `out_code` is already empty
    """
    if h.counts[out_code] < 1:
        raise ConsistencyError(f"Cannot remove codeword {out_code}: bin is 0.")
    counts = h.counts.copy()
    counts[out_code] -= 1
    counts[in_code] += 1
    return Histogram(counts=counts, window=h.window)


def histogram_distance(x: np.ndarray, y: np.ndarray) -> float:
    """Euclidean distance between two count vectors.

    Raises:
        ShapeError: on differing bin counts
    """
    if x.shape != y.shape:
        raise ShapeError(f"Histogram shapes {x.shape} and {y.shape} differ.")
    diff = x.astype(np.int64) - y.astype(np.int64)
    return math.sqrt(int(np.dot(diff, diff)))


def distances_to(rows: np.ndarray, query: np.ndarray) -> np.ndarray:
    """Distances from every row of a count matrix to a query histogram."""
    diff = rows.astype(np.int64) - query.astype(np.int64)[None, :]
    return np.sqrt(np.einsum("ij,ij->i", diff, diff).astype(np.float64))


def iter_histogram_chunks(
    codes: np.ndarray, window: int, n_bins: int, chunk: int = 0
) -> Iterator[Tuple[int, np.ndarray]]:
    """Yields (first position, count rows) covering every window position.

    Rows are built from a one-hot difference cumsum, `chunk` rows at a time.
    """
    chunk = chunk or PLASEEK_CONFIG.get("CHUNK_SIZE")
    total = n_positions(len(codes), window)
    codes = np.asarray(codes, dtype=np.int64)
    current = np.bincount(codes[:window], minlength=n_bins).astype(np.int32)
    for start in range(0, total, chunk):
        stop = min(start + chunk, total)
        steps = np.zeros((stop - start, n_bins), dtype=np.int32)
        rows = np.arange(1, stop - start)
        # Row r holds x(start + r), so row r - 1 feeds the step into row r.
        np.add.at(steps, (rows, codes[start : stop - 1]), -1)
        np.add.at(steps, (rows, codes[start + window : stop - 1 + window]), 1)
        steps[0] = current
        block = np.cumsum(steps, axis=0, dtype=np.int32)
        current = block[-1]
        if stop < total:
            current = current.copy()
            current[codes[stop - 1]] -= 1
            current[codes[stop - 1 + window]] += 1
        yield start, block


def histogram_matrix(codes: np.ndarray, window: int, n_bins: int) -> np.ndarray:
    """All window histograms as an (N, n) int32 matrix, N = L - W + 1."""
    total = n_positions(len(codes), window)
    matrix = np.empty((total, n_bins), dtype=np.int32)
    for start, block in iter_histogram_chunks(codes, window, n_bins):
        matrix[start : start + len(block)] = block
    return matrix


class HistogramCursor:
    """Window histogram that moves forward over a codeword sequence.

    Short moves slide frame by frame, moves by w < W positions cost two
    bincounts over w frames, and longer jumps recount the window.
    """

    def __init__(self, codes: np.ndarray, window: int, n_bins: int):
        """Places the cursor at position 0."""
        self.codes = np.asarray(codes, dtype=np.int64)
        self.window = window
        self.n_bins = n_bins
        self.last = n_positions(len(codes), window) - 1
        self.position = 0
        self.counts = np.bincount(self.codes[:window], minlength=n_bins)

    def seek(self, t: int) -> np.ndarray:
        """Moves to position t and returns its counts (not a copy).

        Raises:
            RangeError: if t lies outside [0, L - W]
        """
        if not 0 <= t <= self.last:
            raise RangeError(f"Position {t} outside [0, {self.last}].")
        step = t - self.position
        if step == 0:
            return self.counts
        if 0 < step <= _SLIDE_FRAMES and step < self.window:
            p = self.position
            w = self.window
            counts = self.counts
            dropped = self.codes[p:t].tolist()
            added = self.codes[p + w : t + w].tolist()
            for out_code, in_code in zip(dropped, added):
                counts[out_code] -= 1
                counts[in_code] += 1
        elif 0 < step < self.window:
            p = self.position
            w = self.window
            self.counts -= np.bincount(self.codes[p:t], minlength=self.n_bins)
            self.counts += np.bincount(
                self.codes[p + w : t + w], minlength=self.n_bins
            )
        else:
            self.counts = np.bincount(
                self.codes[t : t + self.window], minlength=self.n_bins
            )
        self.position = t
        return self.counts

    def reset(self, t: int, counts: np.ndarray) -> None:
        """Places the cursor at t with known counts."""
        self.position = t
        self.counts = counts.astype(np.int64)
