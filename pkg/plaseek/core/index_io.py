# Copyright 2024 Plaseek Authors
# SPDX-License-Identifier: Apache-2.0
"""Search index construction and its binary file format.

Layout (all integers and floats little-endian):

    magic "PLAI" | u32 version
    header: u64 W | u64 n | f64 sigma | u64 a | u64 delta | u64 M | u64 L_S
            | u8 method tag | u8 code width | 8 bytes codebook digest
    codes: L_S codewords of `code width` bytes each
    M segment records: u64 start | u64 end | u32 dim | f64[n] mean
            | f64[n * dim] basis (row-major) | f64[(end - start) * (dim + 1)]
            compressed features (row-major)
    u64 block count, then per block: u32 segment | u64 start | u32 length
            | f64 radius
    u64 CRC-64/XZ of every preceding byte

Block representatives are not stored; they are the compressed feature of
each block's first member.
"""
import bisect
import logging
import struct
import time
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from plaseek.config import INDEX_FORMAT, PLASEEK_CONFIG
from plaseek.core.dynseg import (
    DimensionOracle,
    equi_partition,
    score,
    segment_trajectory,
)
from plaseek.core.errors import (
    BadMagicError,
    ChecksumError,
    FormatError,
    InvariantViolation,
    RangeError,
    VersionMismatchError,
)
from plaseek.core.histogram import histogram_matrix, n_positions
from plaseek.core.pla import CovariancePrefix, Segment, compress_rows
from plaseek.core.sampling import Block, build_blocks
from plaseek.models.config_schema import DynsegMethod, IndexConfig
from plaseek.models.results_schema import BuildStats
from plaseek.utils.checksum import crc64

logger = logging.getLogger(__name__)

_HEADER = struct.Struct("<QQdQQQQBB8s")
_SEGMENT = struct.Struct("<QQI")
_BLOCK = struct.Struct("<IQId")
_COUNT = struct.Struct("<Q")
_PREAMBLE = struct.Struct("<4sI")

_TAG_METHODS = {
    tag: name for name, tag in INDEX_FORMAT.get("METHOD_TAGS").items()
}


@dataclass(eq=False)
class PLIndex:
    """Everything a search needs: codewords, segments and blocks.

    Attributes:
        window: window length W in frames
        n_bins: codebook size n
        sigma: contribution threshold of the segment fits
        block: sampling length a
        delta: shiftable range half-width used by segmentation
        method: segmentation method
        codes: stored codeword sequence, length L_S
        segments: KL transforms tiling positions [0, L_S - W]
        features: per segment, compressed features (length, dim + 1)
        blocks: blocks in position order
        codebook_digest: digest of the codebook the codes came from
        memo: arrays derived from the index on first search, reused by later
            searches
    """

    window: int
    n_bins: int
    sigma: float
    block: int
    delta: int
    method: DynsegMethod
    codes: np.ndarray
    segments: List[Segment]
    features: List[np.ndarray]
    blocks: List[Block]
    codebook_digest: bytes = b"\x00" * 8
    memo: Dict[str, Any] = field(default_factory=dict, init=False, repr=False)
    _starts: List[int] = field(default_factory=list, init=False, repr=False)
    _block_offsets: List[int] = field(
        default_factory=list, init=False, repr=False
    )

    def __post_init__(self) -> None:
        self._starts = [seg.start for seg in self.segments]
        offsets = [0]
        for seg in self.segments:
            offsets.append(offsets[-1] + -(-seg.length // self.block))
        self._block_offsets = offsets

    @property
    def n_positions(self) -> int:
        """Number of window positions N = L_S - W + 1."""
        return len(self.codes) - self.window + 1

    def segment_of(self, t: int) -> int:
        """Index of the segment holding position t."""
        if not 0 <= t < self.n_positions:
            raise RangeError(f"Position {t} outside the index.")
        return bisect.bisect_right(self._starts, t) - 1

    def block_of(self, t: int, segment: Optional[int] = None) -> int:
        """Index of the block holding position t."""
        j = self.segment_of(t) if segment is None else segment
        return self._block_offsets[j] + (t - self._starts[j]) // self.block

    def average_dimension(self) -> float:
        """Length-weighted average segment rank."""
        weighted = sum(seg.length * seg.dim for seg in self.segments)
        return weighted / self.n_positions

    def describe(self) -> Dict[str, Any]:
        """Summary of the index parameters and sizes."""
        return {
            "window": self.window,
            "n_bins": self.n_bins,
            "sigma": self.sigma,
            "block": self.block,
            "delta": self.delta,
            "method": self.method,
            "frames": len(self.codes),
            "positions": self.n_positions,
            "segments": len(self.segments),
            "blocks": len(self.blocks),
            "average_dimension": self.average_dimension(),
            "codebook_digest": self.codebook_digest.hex(),
        }

    def __eq__(self, other: object) -> bool:
        """Field-exact comparison, floats compared bit for bit."""
        if not isinstance(other, PLIndex):
            return NotImplemented
        scalars = ("window", "n_bins", "sigma", "block", "delta", "method")
        if any(getattr(self, k) != getattr(other, k) for k in scalars):
            return False
        if self.codebook_digest != other.codebook_digest:
            return False
        if not np.array_equal(self.codes, other.codes):
            return False
        if len(self.segments) != len(other.segments):
            return False
        for a, b, fa, fb in zip(
            self.segments, other.segments, self.features, other.features
        ):
            if (a.start, a.end, a.sigma) != (b.start, b.end, b.sigma):
                return False
            for x, y in ((a.mean, b.mean), (a.basis, b.basis), (fa, fb)):
                if x.shape != y.shape or x.tobytes() != y.tobytes():
                    return False
        return len(self.blocks) == len(other.blocks) and all(
            (a.segment, a.start, a.length) == (b.segment, b.start, b.length)
            and struct.pack("<d", a.radius) == struct.pack("<d", b.radius)
            for a, b in zip(self.blocks, other.blocks)
        )


class IndexBuilder:
    """Builds a PLIndex from a stored codeword sequence.

    Args:
        params: index parameters
        n_bins: codebook size
        codebook_digest: digest of the codebook the codes came from

    Attributes:
        stats: statistics of the last build
    """

    def __init__(
        self,
        params: IndexConfig,
        n_bins: int,
        codebook_digest: bytes = b"\x00" * 8,
    ):
        """Initializes the builder."""
        self.params = params
        self.n_bins = n_bins
        self.codebook_digest = codebook_digest
        self.stats: Optional[BuildStats] = None

    def build(self, codes: np.ndarray) -> PLIndex:
        """Runs histogram sweep, segmentation, segment fits and sampling.

        Raises:
            RangeError: if the stream is shorter than the window
        """
        began = time.perf_counter()
        params = self.params
        codes = np.ascontiguousarray(codes)
        total = n_positions(len(codes), params.window_frames)
        rows = histogram_matrix(codes, params.window_frames, self.n_bins)
        logger.info(
            "Histogram sweep: %d positions x %d bins.", total, self.n_bins
        )

        prefix = CovariancePrefix(rows)
        oracle = DimensionOracle(prefix, params.sigma)
        segments = min(params.segments, total)
        initial = score(equi_partition(total, segments).boundaries, oracle)
        result = segment_trajectory(
            params.dynseg, segments, params.delta, oracle
        )
        logger.info(
            "Segmentation (%s): objective %.4f from %.4f, %d probes.",
            params.dynseg,
            result.objective,
            initial.objective,
            result.probes,
        )

        fitted = []
        features = []
        bounds = result.boundaries
        for a, b in zip(bounds, bounds[1:]):
            seg = prefix.segment(a, b, params.sigma)
            fitted.append(seg)
            features.append(compress_rows(seg, rows[a:b]))
        blocks = build_blocks(features, bounds[:-1], params.block)
        logger.info(
            "Fitted %d segments, %d blocks.", len(fitted), len(blocks)
        )

        index = PLIndex(
            window=params.window_frames,
            n_bins=self.n_bins,
            sigma=params.sigma,
            block=params.block,
            delta=params.delta,
            method=params.dynseg,
            codes=codes,
            segments=fitted,
            features=features,
            blocks=blocks,
            codebook_digest=self.codebook_digest,
        )
        self.stats = BuildStats(
            method=params.dynseg,
            segments=len(fitted),
            positions=total,
            objective=result.objective,
            initial_objective=initial.objective,
            probe_count=result.probes,
            average_dimension=index.average_dimension(),
            blocks=len(blocks),
            build_seconds=time.perf_counter() - began,
        )
        return index


def build_index(
    codes: np.ndarray,
    params: IndexConfig,
    n_bins: int,
    codebook_digest: bytes = b"\x00" * 8,
) -> PLIndex:
    """Builds a search index over a stored codeword sequence."""
    return IndexBuilder(params, n_bins, codebook_digest).build(codes)


def _code_width(n_bins: int) -> int:
    return 1 if n_bins <= 256 else 2


def dumps(index: PLIndex) -> bytes:
    """Serializes an index to bytes."""
    width = _code_width(index.n_bins)
    parts = [
        _PREAMBLE.pack(INDEX_FORMAT.get("MAGIC"), INDEX_FORMAT.get("VERSION")),
        _HEADER.pack(
            index.window,
            index.n_bins,
            index.sigma,
            index.block,
            index.delta,
            len(index.segments),
            len(index.codes),
            INDEX_FORMAT.get("METHOD_TAGS")[index.method],
            width,
            index.codebook_digest,
        ),
        index.codes.astype("<u1" if width == 1 else "<u2").tobytes(),
    ]
    for seg, rows in zip(index.segments, index.features):
        parts.append(_SEGMENT.pack(seg.start, seg.end, seg.dim))
        parts.append(seg.mean.astype("<f8").tobytes())
        parts.append(np.ascontiguousarray(seg.basis).astype("<f8").tobytes())
        parts.append(np.ascontiguousarray(rows).astype("<f8").tobytes())
    parts.append(_COUNT.pack(len(index.blocks)))
    parts.extend(
        _BLOCK.pack(b.segment, b.start, b.length, b.radius)
        for b in index.blocks
    )
    payload = b"".join(parts)
    return payload + _COUNT.pack(crc64(payload))


def save(index: PLIndex, path: str) -> None:
    """Writes an index file."""
    with open(path, "wb") as out_file:
        out_file.write(dumps(index))
    logger.info("Saved index to %s.", path)


class _Reader:
    def __init__(self, payload: bytes, offset: int):
        self.payload = payload
        self.offset = offset

    def unpack(self, layout: struct.Struct) -> Tuple[Any, ...]:
        values = layout.unpack_from(self.payload, self.offset)
        self.offset += layout.size
        return values

    def array(self, dtype: str, count: int) -> np.ndarray:
        size = np.dtype(dtype).itemsize * count
        if self.offset + size > len(self.payload):
            raise FormatError("Index record extends past the end of file.")
        values = np.frombuffer(
            self.payload, dtype=dtype, count=count, offset=self.offset
        )
        self.offset += size
        return values


def loads(payload: bytes) -> PLIndex:
    """Parses an index from bytes and validates it.

    Raises:
        BadMagicError: if the bytes are not an index
        VersionMismatchError: if the format version is unsupported
        ChecksumError: if the trailing checksum does not match, which
            includes truncated files
        FormatError: if the records are inconsistent with their sizes
        InvariantViolation: if the decoded index fails validation
    """
    if payload[:4] != INDEX_FORMAT.get("MAGIC"):
        raise BadMagicError("Not an index file.")
    if len(payload) < _PREAMBLE.size:
        raise ChecksumError("Index file truncated in its preamble.")
    _, version = _PREAMBLE.unpack_from(payload)
    if version != INDEX_FORMAT.get("VERSION"):
        raise VersionMismatchError(
            f"Index version {version}, expected "
            f"{INDEX_FORMAT.get('VERSION')}."
        )
    if len(payload) < _PREAMBLE.size + _HEADER.size + _COUNT.size:
        raise ChecksumError("Index file truncated before its checksum.")
    (stored_crc,) = _COUNT.unpack_from(payload, len(payload) - _COUNT.size)
    body = payload[: -_COUNT.size]
    if crc64(body) != stored_crc:
        raise ChecksumError("Index checksum mismatch.")

    try:
        return _parse(body)
    except struct.error as err:
        raise FormatError(f"Malformed index record: {err}") from err


def _parse(body: bytes) -> PLIndex:
    reader = _Reader(body, _PREAMBLE.size)
    (
        window,
        n_bins,
        sigma,
        block,
        delta,
        n_segments,
        length,
        method_tag,
        width,
        digest,
    ) = reader.unpack(_HEADER)
    if method_tag not in _TAG_METHODS or width not in (1, 2):
        raise FormatError(f"Unknown method tag {method_tag} or width {width}.")
    codes = reader.array("<u1" if width == 1 else "<u2", length).copy()

    segments = []
    features = []
    for _ in range(n_segments):
        start, end, dim = reader.unpack(_SEGMENT)
        if end <= start:
            raise InvariantViolation(f"Empty segment [{start}, {end}).")
        mean = reader.array("<f8", n_bins).astype(np.float64)
        basis = reader.array("<f8", n_bins * dim).astype(np.float64)
        rows = reader.array("<f8", (end - start) * (dim + 1))
        features.append(rows.astype(np.float64).reshape(end - start, dim + 1))
        segments.append(
            Segment(
                start=start,
                end=end,
                mean=mean,
                basis=basis.reshape(n_bins, dim),
                sigma=sigma,
            )
        )

    (n_blocks,) = reader.unpack(_COUNT)
    blocks = []
    for _ in range(n_blocks):
        segment, start, size, radius = reader.unpack(_BLOCK)
        if segment >= n_segments:
            raise InvariantViolation(
                f"Block at {start} references segment {segment} of "
                f"{n_segments}."
            )
        first = start - segments[segment].start
        if not 0 <= first < segments[segment].length:
            raise InvariantViolation(
                f"Block at {start} lies outside segment {segment}."
            )
        blocks.append(
            Block(
                segment=segment,
                start=start,
                length=size,
                representative=features[segment][first],
                radius=radius,
            )
        )
    if reader.offset != len(body):
        raise FormatError(
            f"{len(body) - reader.offset} trailing bytes after block table."
        )

    index = PLIndex(
        window=window,
        n_bins=n_bins,
        sigma=sigma,
        block=block,
        delta=delta,
        method=_TAG_METHODS[method_tag],
        codes=codes,
        segments=segments,
        features=features,
        blocks=blocks,
        codebook_digest=digest,
    )
    validate(index)
    return index


def load(path: str) -> PLIndex:
    """Reads and validates an index file.

    Raises:
        BadMagicError: if the file is not an index
        VersionMismatchError: if the format version is unsupported
        ChecksumError: if the file is corrupted or truncated
        InvariantViolation: if the decoded index fails validation
    """
    with open(path, "rb") as in_file:
        payload = in_file.read()
    index = loads(payload)
    logger.info(
        "Loaded index %s: %d positions, %d segments.",
        path,
        index.n_positions,
        len(index.segments),
    )
    return index


def find_problems(
    index: PLIndex, codebook_digest: Optional[bytes] = None
) -> List[str]:
    """Lists every violated index invariant.

    Args:
        index: index to check
        codebook_digest: when given, must match the stored digest

    Returns:
        Human-readable descriptions, empty when the index is consistent.
    """
    problems = []
    total = index.n_positions
    if total < 1:
        problems.append("Stream is shorter than the window.")
    if len(index.codes) and int(index.codes.max()) >= index.n_bins:
        problems.append("Codeword outside the codebook.")
    if codebook_digest is not None and codebook_digest != index.codebook_digest:
        problems.append("Codebook digest does not match the index.")

    expected = 0
    tolerance = 1e-9
    for j, (seg, rows) in enumerate(zip(index.segments, index.features)):
        if seg.start != expected:
            problems.append(
                f"Segment {j} starts at {seg.start}, not {expected}."
            )
        expected = seg.end
        if not 1 <= seg.dim <= index.n_bins:
            problems.append(f"Segment {j} has rank {seg.dim}.")
        gram = seg.basis.T @ seg.basis
        if not np.allclose(gram, np.eye(seg.dim), atol=tolerance, rtol=0.0):
            problems.append(f"Segment {j} basis is not orthonormal.")
        if rows.shape != (seg.length, seg.dim + 1):
            problems.append(f"Segment {j} features have shape {rows.shape}.")
        elif np.any(rows[:, -1] < 0.0):
            problems.append(f"Segment {j} has negative projection distances.")
    if expected != total:
        problems.append(f"Segments cover [0, {expected}), not [0, {total}).")

    cursor = 0
    for i, blk in enumerate(index.blocks):
        if blk.start != cursor:
            problems.append(f"Block {i} starts at {blk.start}, not {cursor}.")
        if not 1 <= blk.length <= index.block:
            problems.append(f"Block {i} has length {blk.length}.")
        seg = index.segments[blk.segment]
        if blk.start < seg.start or blk.end > seg.end:
            problems.append(f"Block {i} crosses segment {blk.segment}.")
        if blk.radius < 0.0:
            problems.append(f"Block {i} has a negative radius.")
        cursor = blk.end
    if cursor != total:
        problems.append(f"Blocks cover [0, {cursor}), not [0, {total}).")
    return problems


def validate(index: PLIndex, codebook_digest: Optional[bytes] = None) -> None:
    """Checks index invariants.

    Raises:
        InvariantViolation: listing every violated invariant
    """
    problems = find_problems(index, codebook_digest)
    if problems:
        raise InvariantViolation("; ".join(problems))


def audit_radii(index: PLIndex) -> List[str]:
    """Recomputes block radii and reports blocks whose radius is too small."""
    problems = []
    tolerance = PLASEEK_CONFIG.get("COMPRESSED_SLACK")
    for i, blk in enumerate(index.blocks):
        seg = index.segments[blk.segment]
        members = index.features[blk.segment][
            blk.start - seg.start : blk.end - seg.start
        ]
        spread = float(
            np.max(np.linalg.norm(members - blk.representative, axis=1))
        )
        if spread > blk.radius * (1.0 + tolerance) + tolerance:
            problems.append(
                f"Block {i} radius {blk.radius} below member spread {spread}."
            )
    return problems
