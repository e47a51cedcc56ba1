# Copyright 2024 Plaseek Authors
# SPDX-License-Identifier: Apache-2.0
"""Tests for the plaseek.utils.checksum module."""
from plaseek.utils.checksum import crc64


def _bitwise_crc64(data: bytes) -> int:
    """Reference CRC-64/XZ, one bit at a time."""
    crc = 0xFFFFFFFFFFFFFFFF
    for byte in data:
        crc ^= byte
        for _ in range(8):
            crc = (crc >> 1) ^ 0xC96C5795D7870F42 if crc & 1 else crc >> 1
    return crc ^ 0xFFFFFFFFFFFFFFFF


def test_crc64_check_value():
    """Tests the published check value of CRC-64/XZ."""
    assert crc64(b"123456789") == 0x995DC9BBDF1939FA
    assert crc64(b"") == 0


def test_crc64_matches_bitwise_reference(rng):
    """Tests slicing-by-8 against the bitwise algorithm at every alignment."""
    data = rng.integers(0, 256, size=41, dtype="uint8").tobytes()
    for size in range(len(data) + 1):
        assert crc64(data[:size]) == _bitwise_crc64(data[:size])


def test_crc64_incremental():
    """Tests that checksums can be continued over split input."""
    assert crc64(b"6789", crc64(b"12345")) == crc64(b"123456789")
