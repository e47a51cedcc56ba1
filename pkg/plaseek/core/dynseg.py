# Copyright 2024 Plaseek Authors
# SPDX-License-Identifier: Apache-2.0
"""Dynamic segmentation of the histogram trajectory.

Boundaries start from an equi-partition and are moved within shiftable
ranges to minimize the length-weighted average segment dimensionality

    (1 / N) * sum_j (t_j - t_{j-1}) * c(t_{j-1}, t_j, sigma)

where N is the number of window positions and c is the rank a segment fit
would retain. Boundaries are processed left to right, each one optimizing
the two segments it separates with the previous boundary already fixed.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

from plaseek.config import PLASEEK_CONFIG
from plaseek.core.errors import ConfigError, InstanceTooLargeError
from plaseek.core.pla import CovariancePrefix, range_dimension
from plaseek.models.config_schema import DynsegMethod

logger = logging.getLogger(__name__)


class DimensionOracle:
    """Range dimensionality c(t_i, t_j, sigma) with a probe counter.

    Args:
        prefix: covariance prefix table of the trajectory
        sigma: contribution threshold
    """

    def __init__(self, prefix: CovariancePrefix, sigma: float):
        """Starts with a zero probe count."""
        self.prefix = prefix
        self.sigma = sigma
        self.probes = 0

    @property
    def n_positions(self) -> int:
        """Number of window positions N."""
        return self.prefix.n_positions

    def probe(self, t_i: int, t_j: int) -> int:
        """Counted evaluation, used by the segmentation methods."""
        self.probes += 1
        return range_dimension(self.prefix, t_i, t_j, self.sigma)

    def dimension(self, t_i: int, t_j: int) -> int:
        """Uncounted evaluation, used for scoring results."""
        return range_dimension(self.prefix, t_i, t_j, self.sigma)


@dataclass(frozen=True)
class ShiftableRange:
    """Positions a boundary may take: [center - delta, center + delta]."""

    center: int
    delta: int

    @property
    def lo(self) -> int:
        """First admissible position."""
        return self.center - self.delta

    @property
    def hi(self) -> int:
        """Last admissible position."""
        return self.center + self.delta

    def positions(self) -> range:
        """All admissible positions in increasing order."""
        return range(self.lo, self.hi + 1)


@dataclass
class SegmentationResult:
    """Segment boundaries t_0 = 0 < t_1 < ... < t_M = N.

    Attributes:
        boundaries: strictly increasing positions
        dims: rank of every segment, empty until scored
        weighted_dims: sum of length * rank over segments
        probes: counted dimensionality evaluations of the method run
    """

    boundaries: List[int]
    dims: List[int] = field(default_factory=list)
    weighted_dims: int = 0
    probes: int = 0

    @property
    def n_segments(self) -> int:
        """Number of segments M."""
        return len(self.boundaries) - 1

    @property
    def objective(self) -> float:
        """Length-weighted average dimensionality."""
        return self.weighted_dims / self.boundaries[-1]

    def lengths(self) -> List[int]:
        """Length of every segment."""
        return [b - a for a, b in zip(self.boundaries, self.boundaries[1:])]


def score(
    boundaries: List[int], oracle: DimensionOracle, probes: int = 0
) -> SegmentationResult:
    """Evaluates segment ranks and the objective of a boundary set."""
    dims = [
        oracle.dimension(a, b) for a, b in zip(boundaries, boundaries[1:])
    ]
    weighted = sum(
        (b - a) * c for a, b, c in zip(boundaries, boundaries[1:], dims)
    )
    return SegmentationResult(
        boundaries=list(boundaries),
        dims=dims,
        weighted_dims=weighted,
        probes=probes,
    )


def equi_partition(length: int, segments: int) -> SegmentationResult:
    """Boundaries at round(j * length / segments), halves rounded up.

    Raises:
        ConfigError: unless 1 <= segments <= length
    """
    if not 1 <= segments <= length:
        raise ConfigError(
            f"Cannot split {length} positions into {segments} segments."
        )
    boundaries = [
        (2 * j * length + segments) // (2 * segments)
        for j in range(segments + 1)
    ]
    return SegmentationResult(boundaries=boundaries)


def shiftable_ranges(
    boundaries: List[int], delta: int
) -> List[ShiftableRange]:
    """Shiftable range of every inner boundary.

    Each range is shrunk so it stays strictly between the midpoints to its
    neighbors; adjacent ranges are therefore disjoint and boundaries chosen
    from them stay strictly increasing.
    """
    ranges = []
    for j in range(1, len(boundaries) - 1):
        left_gap = boundaries[j] - boundaries[j - 1]
        right_gap = boundaries[j + 1] - boundaries[j]
        effective = min(delta, (left_gap - 1) // 2, (right_gap - 1) // 2)
        ranges.append(ShiftableRange(center=boundaries[j], delta=effective))
    return ranges


def _weighted_local(
    prev: int, t: int, nxt: int, dims: Tuple[int, int]
) -> int:
    """Numerator of the two-segment local objective at boundary t."""
    return (t - prev) * dims[0] + (nxt - t) * dims[1]


def _pick(
    candidates: Dict[int, Tuple[int, int]], prev: int, nxt: int, center: int
) -> int:
    """Argmin of the local objective; ties toward center, then smaller t."""
    return min(
        candidates,
        key=lambda t: (
            _weighted_local(prev, t, nxt, candidates[t]),
            abs(t - center),
            t,
        ),
    )


def local_optimize(
    initial: SegmentationResult, delta: int, oracle: DimensionOracle
) -> SegmentationResult:
    """Exhaustive scan of every shiftable range, left to right.

    Args:
        initial: initial partition, usually the equi-partition
        delta: shiftable range half-width
        oracle: dimensionality oracle of the trajectory

    Returns:
        Scored result with the probe count of the scan.
    """
    start_probes = oracle.probes
    optimized = list(initial.boundaries)
    for j, srange in enumerate(shiftable_ranges(initial.boundaries, delta), 1):
        prev, nxt = optimized[j - 1], initial.boundaries[j + 1]
        candidates = {
            t: (oracle.probe(prev, t), oracle.probe(t, nxt))
            for t in srange.positions()
        }
        optimized[j] = _pick(candidates, prev, nxt, srange.center)
        logger.debug(
            "Boundary %d: %d -> %d (local scan).",
            j,
            srange.center,
            optimized[j],
        )
    return score(optimized, oracle, oracle.probes - start_probes)


def estimate_kj(
    c_ll: int, c_lc: int, c_lr: int, c_rl: int, c_rc: int, c_rr: int
) -> int:
    """Estimated number of dimensionality changes within a shiftable range.

    The c_X? values are the left (c_L?) and right (c_R?) segment ranks with
    the boundary at the low edge (?L), center (?C) and high edge (?R) of its
    range. The result is clamped to at least 1.
    """
    if c_lr <= c_rr and c_ll < c_rl:
        k = c_lr - c_ll
    elif c_lr > c_rr and c_ll < c_rl and c_lc <= c_rc:
        k = (c_lc - c_ll) + min(c_rc, c_lr) - min(c_lc, c_rr)
    elif c_lr > c_rr and c_ll < c_rl and c_lc > c_rc:
        k = (c_rc - c_rr) + min(c_lc, c_rl) - min(c_rc, c_ll)
    else:
        k = c_rl - c_rr
    return max(k, 1)


def step_two_count(k: int, delta: int) -> int:
    """Number of equispaced probes u = round(sqrt(2 K delta) - 2).

    Clamped to [0, 2 delta - 1].
    """
    if delta <= 0:
        return 0
    u = int(round(math.sqrt(2.0 * k * delta) - 2.0))
    return min(max(u, 0), 2 * delta - 1)


def probe_bound(k: int, delta: int) -> float:
    """Expected probes per boundary at the best u: 4 sqrt(2 K delta) + 2.

    This is the minimum over u of 2((3 + u) + K delta / (u / 2 + 1)).
    """
    return 4.0 * math.sqrt(2.0 * k * delta) + 2.0


def coarse_to_fine_boundary(
    prev: int, srange: ShiftableRange, nxt: int, oracle: DimensionOracle
) -> int:
    """Finds a boundary position by probing where segment ranks change.

    Step 1 probes the range edges and center. Step 2 probes u equispaced
    positions. Step 3 bisects every gap between adjacent probes whose left
    or right rank differs, down to unit resolution. The probed position
    minimizing the local objective is returned.

    Args:
        prev: optimized previous boundary
        srange: shiftable range of this boundary
        nxt: initial next boundary
        oracle: dimensionality oracle

    Returns:
        Chosen boundary position.
    """
    probed: Dict[int, Tuple[int, int]] = {}

    def visit(t: int) -> Tuple[int, int]:
        if t not in probed:
            probed[t] = (oracle.probe(prev, t), oracle.probe(t, nxt))
        return probed[t]

    lo, center, hi = srange.lo, srange.center, srange.hi
    c_ll, c_rl = visit(lo)
    c_lc, c_rc = visit(center)
    c_lr, c_rr = visit(hi)
    span = 2 * srange.delta
    k = estimate_kj(c_ll, c_lc, c_lr, c_rl, c_rc, c_rr)
    u = step_two_count(k, srange.delta)
    for i in range(1, u + 1):
        visit(lo + (2 * span * i + u + 1) // (2 * (u + 1)))

    pending = sorted(probed)
    gaps = list(zip(pending, pending[1:]))
    while gaps:
        a, b = gaps.pop()
        if b - a < 2 or probed[a] == probed[b]:
            continue
        mid = (a + b) // 2
        visit(mid)
        gaps.append((a, mid))
        gaps.append((mid, b))

    chosen = _pick(probed, prev, nxt, center)
    logger.debug(
        "Boundary %d -> %d: K=%d, u=%d, %d positions probed.",
        center,
        chosen,
        k,
        u,
        len(probed),
    )
    return chosen


def coarse_to_fine(
    initial: SegmentationResult, delta: int, oracle: DimensionOracle
) -> SegmentationResult:
    """Coarse-to-fine boundary detection for every boundary, left to right."""
    start_probes = oracle.probes
    optimized = list(initial.boundaries)
    for j, srange in enumerate(shiftable_ranges(initial.boundaries, delta), 1):
        optimized[j] = coarse_to_fine_boundary(
            optimized[j - 1], srange, initial.boundaries[j + 1], oracle
        )
    return score(optimized, oracle, oracle.probes - start_probes)


def dp_segment(
    length: int, segments: int, delta: int, oracle: DimensionOracle
) -> SegmentationResult:
    """Exact minimizer of the objective with every boundary in its range.

    Raises:
        InstanceTooLargeError: if segments * (2 delta + 1)**2 exceeds the
            evaluation guard
    """
    limit = PLASEEK_CONFIG.get("DP_MAX_EVALUATIONS")
    if segments * (2 * delta + 1) ** 2 > limit:
        raise InstanceTooLargeError(
            f"DP over {segments} segments with delta {delta} needs more "
            f"than {limit} evaluations."
        )
    initial = equi_partition(length, segments)
    start_probes = oracle.probes
    ranges = shiftable_ranges(initial.boundaries, delta)
    layers = [[0]] + [list(r.positions()) for r in ranges] + [[length]]

    cost = {0: 0}
    back: List[Dict[int, int]] = [{}]
    for layer_prev, layer in zip(layers, layers[1:]):
        next_cost: Dict[int, int] = {}
        choice: Dict[int, int] = {}
        for t in layer:
            best = None
            for p in layer_prev:
                if p >= t:
                    continue
                value = cost[p] + (t - p) * oracle.probe(p, t)
                if best is None or value < best:
                    best = value
                    choice[t] = p
            if best is not None:
                next_cost[t] = best
        cost = next_cost
        back.append(choice)

    boundaries = [length]
    for choice in reversed(back[1:]):
        boundaries.append(choice[boundaries[-1]])
    boundaries.reverse()
    return score(boundaries, oracle, oracle.probes - start_probes)


def segment_trajectory(
    method: DynsegMethod,
    segments: int,
    delta: int,
    oracle: DimensionOracle,
) -> SegmentationResult:
    """Runs a segmentation method from the equi-partition.

    Args:
        method: "none", "local", "coarse" or "dp"
        segments: number of segments M
        delta: shiftable range half-width
        oracle: dimensionality oracle of the trajectory

    Returns:
        Scored segmentation.
    """
    length = oracle.n_positions
    if segments > length:
        logger.warning(
            "%d segments requested for %d positions; using %d.",
            segments,
            length,
            length,
        )
        segments = length
    initial = equi_partition(length, segments)
    if method == "none":
        return score(initial.boundaries, oracle)
    if method == "local":
        return local_optimize(initial, delta, oracle)
    if method == "coarse":
        return coarse_to_fine(initial, delta, oracle)
    if method == "dp":
        return dp_segment(length, segments, delta, oracle)
    raise ConfigError(f"Unknown segmentation method {method}.")


def probe_count_audit(
    method: DynsegMethod,
    segments: int,
    delta: int,
    oracle: DimensionOracle,
) -> int:
    """Number of dimensionality evaluations one method run makes."""
    return segment_trajectory(method, segments, delta, oracle).probes
