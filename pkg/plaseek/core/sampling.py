# Copyright 2024 Plaseek Authors
# SPDX-License-Identifier: Apache-2.0
"""Temporal sampling of compressed features into blocks.

A block is a run of at most `a` consecutive compressed features of one
segment, represented by its first member and the largest distance from that
member to any other. By the triangle inequality, the distance from a query
to the representative minus that radius bounds every member's distance.
"""
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from plaseek.core.errors import ConfigError, SegmentMismatchError
from plaseek.core.pla import CompressedFeature


@dataclass(frozen=True)
class Block:
    """Run of compressed features [start, start + length) of one segment.

    Attributes:
        segment: index of the owning segment
        start: first window position
        length: number of members, at most the sampling length
        representative: compressed feature of the first member as (z, delta)
        radius: largest distance from the representative to a member
    """

    segment: int
    start: int
    length: int
    representative: np.ndarray
    radius: float

    @property
    def end(self) -> int:
        """One past the last member."""
        return self.start + self.length


def _segment_blocks(
    segment: int, first: int, features: np.ndarray, a: int
) -> List[Block]:
    starts = np.arange(0, len(features), a)
    owner = np.repeat(starts, a)[: len(features)]
    spread = np.linalg.norm(features - features[owner], axis=1)
    radii = np.maximum.reduceat(spread, starts)
    return [
        Block(
            segment=segment,
            start=first + int(s),
            length=int(min(a, len(features) - s)),
            representative=features[s],
            radius=float(r),
        )
        for s, r in zip(starts, radii)
    ]


def build_blocks(
    features: Sequence[np.ndarray], starts: Sequence[int], a: int
) -> List[Block]:
    """Tiles every segment's compressed features with blocks of length a.

    Args:
        features: per segment, the (length, m + 1) compressed features
        starts: first window position of every segment
        a: sampling length

    Returns:
        Blocks in position order; none spans two segments.

    Raises:
        ConfigError: if a < 1
    """
    if a < 1:
        raise ConfigError(f"Block length must be at least 1, got {a}.")
    blocks: List[Block] = []
    for segment, (rows, first) in enumerate(zip(features, starts)):
        blocks.extend(_segment_blocks(segment, first, rows, a))
    return blocks


def block_lower_bound(
    block: Block, y_q: CompressedFeature, projected: bool = False
) -> float:
    """Lower bound ||representative - y_q|| - radius on member distances.

    With `projected`, only the z coordinates are compared; the radius over
    full compressed features also covers the projected coordinates.

    Raises:
        SegmentMismatchError: if y_q was compressed under another segment
    """
    if len(block.representative) != y_q.dim + 1:
        raise SegmentMismatchError(
            f"Query of rank {y_q.dim} against block of rank "
            f"{len(block.representative) - 1}."
        )
    if projected:
        gap = block.representative[:-1] - y_q.z
        return float(np.linalg.norm(gap)) - block.radius
    return float(np.linalg.norm(block.representative - y_q.as_vector())) - (
        block.radius
    )
