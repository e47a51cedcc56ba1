# Copyright 2024 Plaseek Authors
# SPDX-License-Identifier: Apache-2.0
"""Exceptions raised by plaseek.

Every error carries the process exit code the CLI uses for it:
1 for usage and configuration problems, 2 for bad data, and 3 when an
invariant of a built artifact or of the search engine is violated.
"""


class PlaseekError(Exception):
    """Generic plaseek error."""

    exit_code = 2


class ConfigError(PlaseekError):
    """Invalid parameter or configuration value."""

    exit_code = 1


class DecodeError(PlaseekError):
    """Audio container is valid but its encoding is unsupported."""


class FormatError(PlaseekError):
    """File is not in the expected format or is truncated."""


class EmptyInputError(PlaseekError):
    """Input is too short to produce a single frame or window."""


class TrainingError(PlaseekError):
    """Codebook training is impossible on the given features."""


class ShapeError(PlaseekError):
    """Vector or matrix dimensions do not match."""


class RangeError(PlaseekError):
    """Frame range or window lies outside the sequence."""


class ConsistencyError(PlaseekError):
    """Incremental state update would leave an inconsistent state."""


class SegmentMismatchError(PlaseekError):
    """Compressed features from different segments were combined."""


class InstanceTooLargeError(PlaseekError):
    """Problem instance exceeds the size guard of an exact solver."""


class IndexFormatError(FormatError):
    """Index or codebook file cannot be loaded."""


class BadMagicError(IndexFormatError):
    """File does not start with the expected magic bytes."""


class VersionMismatchError(IndexFormatError):
    """File was written by an unsupported format version."""


class ChecksumError(IndexFormatError):
    """Stored checksum does not match the file contents."""


class InvariantViolation(PlaseekError):
    """A structural or search invariant does not hold."""

    exit_code = 3
