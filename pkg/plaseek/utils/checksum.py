# Copyright 2024 Plaseek Authors
# SPDX-License-Identifier: Apache-2.0
"""CRC-64/XZ checksum used to seal index files.

Reflected polynomial 0xC96C5795D7870F42 (ECMA-182), initial value and final
xor all ones. Slicing-by-8 keeps the pure Python loop at one iteration per
eight bytes.
"""
import struct
from typing import List

_POLY = 0xC96C5795D7870F42
_MASK = 0xFFFFFFFFFFFFFFFF


def _build_tables() -> List[List[int]]:
    base = []
    for i in range(256):
        crc = i
        for _ in range(8):
            crc = (crc >> 1) ^ _POLY if crc & 1 else crc >> 1
        base.append(crc)
    tables = [base]
    for _ in range(7):
        prev = tables[-1]
        tables.append(
            [(prev[i] >> 8) ^ base[prev[i] & 0xFF] for i in range(256)]
        )
    return tables


_TABLES = _build_tables()


def crc64(data: bytes, crc: int = 0) -> int:
    """Compute the CRC-64/XZ of `data`.

    Args:
        data: bytes to checksum
        crc: previous checksum when processing data in pieces

    Returns:
        The checksum as an unsigned 64-bit integer.
    """
    t0, t1, t2, t3, t4, t5, t6, t7 = _TABLES
    crc = ~crc & _MASK
    view = memoryview(data)
    aligned = len(view) - len(view) % 8
    for (word,) in struct.iter_unpack("<Q", view[:aligned]):
        crc ^= word
        crc = (
            t7[crc & 0xFF]
            ^ t6[(crc >> 8) & 0xFF]
            ^ t5[(crc >> 16) & 0xFF]
            ^ t4[(crc >> 24) & 0xFF]
            ^ t3[(crc >> 32) & 0xFF]
            ^ t2[(crc >> 40) & 0xFF]
            ^ t1[(crc >> 48) & 0xFF]
            ^ t0[crc >> 56]
        )
    for byte in view[aligned:]:
        crc = t0[(crc ^ byte) & 0xFF] ^ (crc >> 8)
    return ~crc & _MASK
