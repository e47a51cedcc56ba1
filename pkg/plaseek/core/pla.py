# Copyright 2024 Plaseek Authors
# SPDX-License-Identifier: Apache-2.0
"""Piecewise linear approximation of the histogram trajectory.

Each segment of window positions gets its own KL transform (PCA): a mean,
an orthonormal basis of the leading eigenvectors of the segment covariance,
and the minimal rank whose eigenvalues reach the contribution threshold.
A histogram compresses to its projected coordinates plus the distance from
the segment subspace; distances between compressed features lower-bound
histogram distances.

Segment statistics are computed from exact integer sums of x and x x^T. The
products are formed in float64 BLAS, which is exact while every partial sum
stays below 2**53, and converted back to int64.
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from plaseek.config import PLASEEK_CONFIG
from plaseek.core.errors import (
    ConfigError,
    RangeError,
    SegmentMismatchError,
    ShapeError,
)

logger = logging.getLogger(__name__)

# N * W bound keeping integer covariance numerators inside int64
_MAX_MASS = 3_000_000_000


@dataclass(frozen=True)
class Segment:
    """KL transform of the window positions [start, end)."""

    start: int
    end: int
    mean: np.ndarray
    basis: np.ndarray
    sigma: float

    def __post_init__(self) -> None:
        if self.start >= self.end:
            raise RangeError(f"Empty segment [{self.start}, {self.end}).")

    @property
    def dim(self) -> int:
        """Retained rank m_j."""
        return int(self.basis.shape[1])

    @property
    def length(self) -> int:
        """Number of window positions."""
        return self.end - self.start

    def contains(self, t: int) -> bool:
        """Whether position t belongs to this segment."""
        return self.start <= t < self.end


@dataclass(frozen=True)
class CompressedFeature:
    """Projected coordinates z and projection distance delta."""

    z: np.ndarray
    delta: float

    @property
    def dim(self) -> int:
        """Length of z."""
        return int(self.z.shape[0])

    def as_vector(self) -> np.ndarray:
        """(z_1, ..., z_m, delta)."""
        return np.append(self.z, self.delta)


def exact_gram(rows: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Integer sums of x and x x^T over count rows."""
    as_float = rows.astype(np.float64)
    s1 = as_float.sum(axis=0)
    s2 = as_float.T @ as_float
    return s1.astype(np.int64), s2.astype(np.int64)


def covariance_from_sums(
    count: int, s1: np.ndarray, s2: np.ndarray
) -> np.ndarray:
    """Population covariance (count * S2 - S1 S1^T) / count**2."""
    numerator = count * s2 - np.outer(s1, s1)
    return numerator.astype(np.float64) / float(count) ** 2


def leading_eigenpairs(cov: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Eigenvalues in descending order, clamped at 0, with eigenvectors."""
    values, vectors = np.linalg.eigh(cov)
    return np.maximum(values[::-1], 0.0), vectors[:, ::-1]


def dimension_for(eigenvalues: np.ndarray, sigma: float) -> int:
    """Minimal m whose leading eigenvalues hold a fraction sigma of the total.

    A zero total gives 1.
    """
    total = float(eigenvalues.sum())
    if total <= 0.0:
        return 1
    cumulative = np.cumsum(eigenvalues) / total
    cumulative[-1] = 1.0
    return int(np.argmax(cumulative >= sigma)) + 1


def check_mass(n_rows: int, window: int) -> None:
    """Rejects trajectories whose integer sums could overflow int64."""
    if n_rows * window >= _MAX_MASS:
        raise ConfigError(
            f"{n_rows} positions x window {window} exceeds the supported "
            f"trajectory size ({_MAX_MASS})."
        )


def segment_from_sums(
    start: int,
    end: int,
    s1: np.ndarray,
    s2: np.ndarray,
    sigma: float,
) -> Segment:
    """Builds the KL transform of a range from its integer sums."""
    count = end - start
    values, vectors = leading_eigenpairs(covariance_from_sums(count, s1, s2))
    dim = dimension_for(values, sigma)
    return Segment(
        start=start,
        end=end,
        mean=s1.astype(np.float64) / count,
        basis=np.ascontiguousarray(vectors[:, :dim]),
        sigma=sigma,
    )


def fit_segment(rows: np.ndarray, sigma: float, start: int = 0) -> Segment:
    """Fits the KL transform of a run of histograms.

    Args:
        rows: histogram counts, shape (count, n)
        sigma: contribution threshold in (0, 1]
        start: position of the first row in the stored stream

    Returns:
        Segment covering [start, start + count).

    Raises:
        RangeError: if `rows` is empty
    """
    if len(rows) == 0:
        raise RangeError("Cannot fit a segment to an empty range.")
    s1, s2 = exact_gram(rows)
    return segment_from_sums(start, start + len(rows), s1, s2, sigma)


def _check_vector(seg: Segment, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != seg.mean.shape:
        raise ShapeError(
            f"Vector of shape {x.shape} does not match segment dimension "
            f"{seg.mean.shape[0]}."
        )
    return x


def project(seg: Segment, x: np.ndarray) -> np.ndarray:
    """z = P^T (x - mean)."""
    x = _check_vector(seg, x)
    return seg.basis.T @ (x - seg.mean)


def reconstruct(seg: Segment, z: np.ndarray) -> np.ndarray:
    """P z + mean."""
    z = np.asarray(z, dtype=np.float64)
    if z.shape != (seg.dim,):
        raise ShapeError(f"z of shape {z.shape}, segment rank {seg.dim}.")
    return seg.basis @ z + seg.mean


def projection_distance(seg: Segment, x: np.ndarray) -> float:
    """Distance from x to the affine subspace of the segment."""
    return compress(seg, x).delta


def compress(seg: Segment, x: np.ndarray) -> CompressedFeature:
    """Compressed feature (z, delta) of x under the segment map."""
    centered = _check_vector(seg, x) - seg.mean
    z = seg.basis.T @ centered
    residual = centered - seg.basis @ z
    return CompressedFeature(z=z, delta=float(np.linalg.norm(residual)))


def compress_rows(seg: Segment, rows: np.ndarray) -> np.ndarray:
    """Compressed features of many histograms as a (count, m + 1) matrix."""
    chunk = PLASEEK_CONFIG.get("CHUNK_SIZE")
    out = np.empty((len(rows), seg.dim + 1))
    for start in range(0, len(rows), chunk):
        centered = rows[start : start + chunk].astype(np.float64) - seg.mean
        z = centered @ seg.basis
        residual = centered - z @ seg.basis.T
        out[start : start + chunk, :-1] = z
        out[start : start + chunk, -1] = np.linalg.norm(residual, axis=1)
    return out


def compressed_distance(y1: CompressedFeature, y2: CompressedFeature) -> float:
    """sqrt(||z1 - z2||**2 + (delta1 - delta2)**2).

    Raises:
        SegmentMismatchError: if the features have different ranks
    """
    if y1.dim != y2.dim:
        raise SegmentMismatchError(
            f"Compressed features of rank {y1.dim} and {y2.dim}."
        )
    dz = y1.z - y2.z
    dd = y1.delta - y2.delta
    return math.sqrt(float(dz @ dz) + dd * dd)


def projected_distance(y1: CompressedFeature, y2: CompressedFeature) -> float:
    """||z1 - z2||, the bound without the projection distance.

    Raises:
        SegmentMismatchError: if the features have different ranks
    """
    if y1.dim != y2.dim:
        raise SegmentMismatchError(
            f"Compressed features of rank {y1.dim} and {y2.dim}."
        )
    return float(np.linalg.norm(y1.z - y2.z))


class CovariancePrefix:
    """Checkpointed prefix sums of x and x x^T over a histogram trajectory.

    Checkpoints are stored every `stride` positions, with the stride chosen
    to fit the memory budget. The sums of any range are the checkpoint
    difference plus the rows between a checkpoint and the range ends.

    Args:
        rows: all window histograms, shape (N, n)
        budget_bytes: memory allowed for the checkpoints
    """

    def __init__(self, rows: np.ndarray, budget_bytes: Optional[int] = None):
        """Accumulates the checkpoints."""
        self.rows = rows
        self.n_positions, self.n_bins = rows.shape
        if self.n_positions:
            check_mass(self.n_positions, int(rows[0].sum()))
        budget = budget_bytes or PLASEEK_CONFIG.get("PREFIX_BUDGET_BYTES")
        per_checkpoint = (self.n_bins * self.n_bins + self.n_bins) * 8
        self.stride = max(
            1, math.ceil((self.n_positions + 1) * per_checkpoint / budget)
        )
        n_checkpoints = self.n_positions // self.stride + 1
        self.s1 = np.zeros((n_checkpoints, self.n_bins), dtype=np.int64)
        self.s2 = np.zeros(
            (n_checkpoints, self.n_bins, self.n_bins), dtype=np.int64
        )
        for k in range(1, n_checkpoints):
            block = rows[(k - 1) * self.stride : k * self.stride]
            d1, d2 = exact_gram(block)
            self.s1[k] = self.s1[k - 1] + d1
            self.s2[k] = self.s2[k - 1] + d2
        logger.debug(
            "Covariance prefix: %d checkpoints at stride %d.",
            n_checkpoints,
            self.stride,
        )

    def _prefix(self, p: int) -> Tuple[np.ndarray, np.ndarray]:
        k = p // self.stride
        tail = self.rows[k * self.stride : p]
        if len(tail) == 0:
            return self.s1[k], self.s2[k]
        d1, d2 = exact_gram(tail)
        return self.s1[k] + d1, self.s2[k] + d2

    def range_sums(self, t_i: int, t_j: int) -> Tuple[np.ndarray, np.ndarray]:
        """Integer sums of x and x x^T over positions [t_i, t_j).

        Raises:
            RangeError: if the range is empty, inverted or out of bounds
        """
        if not 0 <= t_i < t_j <= self.n_positions:
            raise RangeError(
                f"Range [{t_i}, {t_j}) invalid for {self.n_positions} "
                "positions."
            )
        if t_j - t_i <= self.stride:
            return exact_gram(self.rows[t_i:t_j])
        a1, a2 = self._prefix(t_i)
        b1, b2 = self._prefix(t_j)
        return b1 - a1, b2 - a2

    def segment(self, t_i: int, t_j: int, sigma: float) -> Segment:
        """Fits the segment [t_i, t_j) from the prefix sums."""
        s1, s2 = self.range_sums(t_i, t_j)
        return segment_from_sums(t_i, t_j, s1, s2, sigma)


def range_dimension(
    prefix: CovariancePrefix, t_i: int, t_j: int, sigma: float
) -> int:
    """Rank fit_segment would retain over positions [t_i, t_j).

    Raises:
        RangeError: if the range is empty, inverted or out of bounds
    """
    s1, s2 = prefix.range_sums(t_i, t_j)
    values, _ = leading_eigenpairs(covariance_from_sums(t_j - t_i, s1, s2))
    return dimension_for(values, sigma)
