# Copyright 2024 Plaseek Authors
# SPDX-License-Identifier: Apache-2.0
"""Two-stage search over a PLIndex.

The scan works on compressed features. Lower bounds of every block are
computed at once, and a block whose bound exceeds the threshold is skipped
whole together with the positions its skip width rules out. In the remaining
blocks each member's compressed distance decides whether the exact histogram
distance is computed. Compressed distances never exceed histogram distances
and histograms move by at most sqrt(2) per frame, so skip widths computed
from compressed distances never step over a match.
"""
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional

import numpy as np

from plaseek.config import PLASEEK_CONFIG
from plaseek.core.errors import ConfigError
from plaseek.core.histogram import (
    HistogramCursor,
    histogram_distance,
    query_histogram,
)
from plaseek.core.index_io import PLIndex
from plaseek.core.pla import CompressedFeature, compress
from plaseek.core.sampling import Block
from plaseek.core.tas import (
    brute_force_search,
    scan_threshold,
    skip_width,
    skip_widths,
    tas_search,
)
from plaseek.models.config_schema import SearchMode
from plaseek.models.results_schema import (
    Match,
    SearchCounters,
    SearchParams,
    SearchReport,
)

logger = logging.getLogger(__name__)


class QueryCompression:
    """Query histogram with its compressed feature per segment.

    Compressed features are computed on first use and cached.

    Args:
        index: index the query is searched in
        x_q: query histogram counts
    """

    def __init__(self, index: PLIndex, x_q: np.ndarray):
        """Starts with an empty cache."""
        self.index = index
        self.x_q = x_q
        self.cache: Dict[int, CompressedFeature] = {}
        self.hits = 0
        self.misses = 0

    def compress_query(self, j: int) -> CompressedFeature:
        """Compressed feature of the query under segment j."""
        if j in self.cache:
            self.hits += 1
            return self.cache[j]
        self.misses += 1
        feature = compress(self.index.segments[j], self.x_q)
        self.cache[j] = feature
        return feature


class Verifier:
    """Exact histogram distances at arbitrary positions.

    Histograms are rebuilt by sliding from anchors stored every
    `anchor_stride` positions, or from the previous verified position when
    it is close behind.
    """

    def __init__(self, index: PLIndex, anchor_stride: int = 0):
        """Creates an empty anchor cache."""
        self.index = index
        self.stride = anchor_stride or PLASEEK_CONFIG.get("ANCHOR_STRIDE")
        self.anchors: Dict[int, np.ndarray] = {}
        self.cursor = HistogramCursor(index.codes, index.window, index.n_bins)

    def histogram(self, t: int) -> np.ndarray:
        """Counts of the window at position t."""
        here = self.cursor.position
        if not here <= t < here + self.stride:
            k = t // self.stride
            if k not in self.anchors:
                self.cursor.seek(k * self.stride)
                self.anchors[k] = self.cursor.counts.copy()
            else:
                self.cursor.reset(k * self.stride, self.anchors[k])
        return self.cursor.seek(t)

    def distance(self, t: int, x_q: np.ndarray) -> float:
        """Exact histogram distance d(t)."""
        return histogram_distance(self.histogram(t), x_q)

    def verify(
        self, t: int, x_q: np.ndarray, theta: float
    ) -> Optional[Match]:
        """Match at t when d(t) <= theta, else None."""
        d = self.distance(t, x_q)
        return Match(position=t, distance=d) if d <= theta else None


def verify(
    index: PLIndex, t: int, x_q: np.ndarray, theta: float
) -> Optional[Match]:
    """One-off exact verification of position t."""
    return Verifier(index).verify(t, x_q, theta)


def _check_query(
    index: PLIndex, query: np.ndarray, window: Optional[int]
) -> np.ndarray:
    if window is not None and window != index.window:
        raise ConfigError(
            f"Query window {window} differs from index window {index.window}."
        )
    if len(query) and int(np.max(query)) >= index.n_bins:
        raise ConfigError(
            f"Query codeword {int(np.max(query))} outside the index codebook "
            f"of {index.n_bins}."
        )
    return query_histogram(query, index.window, index.n_bins).counts


@dataclass(frozen=True)
class BlockTable:
    """Segment maps and block representatives stacked across segments.

    Ranks differ between segments, so projected coordinates are zero-padded
    to the largest rank `width` and the projection distance sits in column
    `width`. Padded coordinates are zero on both sides of every difference.

    Attributes:
        means: (M, n) segment means
        bases: (M, n, width) zero-padded segment bases
        representatives: (B, width + 1) padded block representatives
        radii: (B,) block radii
        segment: (B,) owning segment of every block
        end: (B,) one past the last member of every block
    """

    means: np.ndarray
    bases: np.ndarray
    representatives: np.ndarray
    radii: np.ndarray
    segment: np.ndarray
    end: np.ndarray

    @property
    def width(self) -> int:
        """Largest segment rank."""
        return int(self.bases.shape[2])

    @classmethod
    def from_index(cls, index: PLIndex) -> "BlockTable":
        """Stacks the segments and blocks of an index."""
        width = max(seg.dim for seg in index.segments)
        bases = np.zeros((len(index.segments), index.n_bins, width))
        for j, seg in enumerate(index.segments):
            bases[j, :, : seg.dim] = seg.basis
        representatives = np.zeros((len(index.blocks), width + 1))
        for b, blk in enumerate(index.blocks):
            dim = len(blk.representative) - 1
            representatives[b, :dim] = blk.representative[:-1]
            representatives[b, width] = blk.representative[-1]
        return cls(
            means=np.stack([seg.mean for seg in index.segments]),
            bases=bases,
            representatives=representatives,
            radii=np.array([blk.radius for blk in index.blocks]),
            segment=np.array([blk.segment for blk in index.blocks]),
            end=np.array([blk.end for blk in index.blocks]),
        )

    def compress_all(self, x_q: np.ndarray) -> np.ndarray:
        """Padded compressed query under every segment, (M, width + 1).

        Agrees with `compress` up to rounding.
        """
        centered = x_q.astype(np.float64)[None, :] - self.means
        z = np.matmul(centered[:, None, :], self.bases)[:, 0, :]
        back = np.matmul(z[:, None, :], self.bases.transpose(0, 2, 1))
        residual = centered - back[:, 0, :]
        return np.column_stack([z, np.linalg.norm(residual, axis=1)])

    def lower_bounds(
        self, stacked: np.ndarray, projected: bool = False
    ) -> np.ndarray:
        """Block lower bounds for a query compressed by `compress_all`."""
        gap = self.representatives - stacked[self.segment]
        if projected:
            gap = gap[:, :-1]
        return np.sqrt(np.einsum("ij,ij->i", gap, gap)) - self.radii


def block_table(index: PLIndex) -> BlockTable:
    """Block table of an index, built on first use and kept in its memo."""
    table = index.memo.get("block_table")
    if table is None:
        table = BlockTable.from_index(index)
        index.memo["block_table"] = table
    return table


class CompressedScan:
    """One accelerated scan of an index for one query.

    Args:
        index: index to search
        x_q: query histogram counts
        theta: search threshold
        projected: match on projected coordinates only
        audit: record which positions got an exact distance in `exact`
    """

    def __init__(
        self,
        index: PLIndex,
        x_q: np.ndarray,
        theta: float,
        projected: bool = False,
        audit: bool = False,
    ):
        """Prepares query compression, verifier and counters."""
        self.index = index
        self.x_q = x_q
        self.theta = theta
        self.projected = projected
        self.bound = scan_threshold(theta)
        self.query = QueryCompression(index, x_q)
        self.verifier = Verifier(index)
        self.counters = SearchCounters()
        self.matches: List[Match] = []
        self.exact: Optional[np.ndarray] = None
        if audit:
            self.exact = np.zeros(index.n_positions, dtype=bool)

    def _member_distances(self, blk: Block, t: int) -> np.ndarray:
        """Compressed distances of the members of `blk` from t on."""
        seg = self.index.segments[blk.segment]
        rows = self.index.features[blk.segment][
            t - seg.start : blk.end - seg.start
        ]
        y_q = self.query.compress_query(blk.segment)
        if self.projected:
            gap = rows[:, :-1] - y_q.z
        else:
            gap = rows - y_q.as_vector()
        return np.sqrt(np.einsum("ij,ij->i", gap, gap))

    def _scan_block(self, blk: Block, t: int) -> int:
        """Scans a surviving block from t on.

        Returns:
            The first position not yet ruled out.
        """
        counters = self.counters
        d_tilde = self._member_distances(blk, t)
        counters.compressed_evaluations += len(d_tilde)
        positions = np.arange(t, blk.end)
        reach = positions + skip_widths(d_tilde, self.bound)
        # A member is covered when an earlier member's skip passes it.
        covered = np.zeros(len(positions), dtype=bool)
        covered[1:] = np.maximum.accumulate(reach)[:-1] > positions[1:]
        counters.positions_visited += int(len(positions) - covered.sum())

        horizon = t
        for i in np.flatnonzero(~covered & (d_tilde <= self.bound)).tolist():
            p = t + i
            if p < horizon:
                continue
            d = self.verifier.distance(p, self.x_q)
            counters.full_distance_evaluations += 1
            if self.exact is not None:
                self.exact[p] = True
            if d <= self.theta:
                self.matches.append(Match(position=p, distance=d))
            horizon = p + skip_width(max(float(d_tilde[i]), d), self.bound)
        return max(blk.end, int(reach.max()), horizon)

    def run(self) -> SearchReport:
        """Scans every window position of the index."""
        index = self.index
        counters = self.counters
        table = block_table(index)
        lower = table.lower_bounds(
            table.compress_all(self.x_q), projected=self.projected
        )
        pruned = lower > self.bound
        counters.block_evaluations = len(lower)
        counters.block_skips = int(pruned.sum())
        # Furthest position ruled out by the pruned blocks up to each block
        jumps = table.end - 1 + skip_widths(lower, self.bound)
        reach = np.where(pruned, jumps, 0)
        carried = np.maximum.accumulate(reach)

        t = 0
        for b in np.flatnonzero(~pruned).tolist():
            blk = index.blocks[b]
            if b:
                t = max(t, int(carried[b - 1]))
            t = max(t, blk.start)
            if t < blk.end:
                t = self._scan_block(blk, t)
        counters.frames_skipped = index.n_positions - counters.positions_visited
        counters.query_cache_hits = self.query.hits
        counters.query_cache_misses = self.query.misses
        mode = "projected" if self.projected else "proposed"
        logger.debug(
            "%s search: %d matches, %d verifications, %d of %d blocks pruned.",
            mode,
            len(self.matches),
            counters.full_distance_evaluations,
            counters.block_skips,
            counters.block_evaluations,
        )
        return SearchReport(mode=mode, matches=self.matches, counters=counters)


def proposed_search(
    index: PLIndex,
    query: np.ndarray,
    theta: float,
    window: Optional[int] = None,
    projected: bool = False,
) -> SearchReport:
    """Accelerated search of a query codeword sequence.

    Args:
        index: index to search
        query: query codewords, truncated to the index window
        theta: search threshold
        window: window the query was prepared for, checked against the index
        projected: match on projected coordinates only

    Returns:
        Matches equal to the exhaustive search, plus work counters.

    Raises:
        ConfigError: if the query does not fit the index
        RangeError: if the query is shorter than the window
    """
    x_q = _check_query(index, query, window)
    return CompressedScan(index, x_q, theta, projected=projected).run()


def search(
    index: PLIndex, query: np.ndarray, theta: float, mode: SearchMode
) -> SearchReport:
    """Runs one search mode against an index.

    Raises:
        ConfigError: if the query does not fit the index or the mode is
            unknown
    """
    if mode in ("proposed", "projected"):
        return proposed_search(
            index, query, theta, projected=mode == "projected"
        )
    _check_query(index, query, None)
    params = SearchParams(theta=theta, window=index.window)
    if mode == "tas":
        return tas_search(index.codes, query, params, index.n_bins)
    if mode == "bruteforce":
        report, _ = brute_force_search(index.codes, query, params, index.n_bins)
        return report
    raise ConfigError(f"Unknown search mode {mode}.")
