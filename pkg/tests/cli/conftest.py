# Copyright 2024 Plaseek Authors
# SPDX-License-Identifier: Apache-2.0
"""Test fixtures for the plaseek CLI."""
import dataclasses
from typing import Dict

import pytest

from plaseek.core import index_io


@pytest.fixture
def corrupt_index(audio_workspace: Dict, tmp_path) -> str:
    """Copy of the workspace index with one flipped byte.

    Returns:
        str: path to the corrupted index
    """
    with open(audio_workspace["index"], "rb") as in_file:
        payload = bytearray(in_file.read())
    payload[len(payload) // 2] ^= 0x10
    path = tmp_path / "corrupt.bin"
    path.write_bytes(bytes(payload))
    return str(path)


@pytest.fixture
def zeroed_radius_index(audio_workspace: Dict, tmp_path) -> str:
    """Copy of the workspace index with one block radius set to 0.

    The file checksum is recomputed, so only a radius audit can tell.

    Returns:
        str: path to the tampered index
    """
    index = index_io.load(audio_workspace["index"])
    wide = next(i for i, b in enumerate(index.blocks) if b.radius > 0.0)
    index.blocks[wide] = dataclasses.replace(index.blocks[wide], radius=0.0)
    path = str(tmp_path / "zeroed.bin")
    index_io.save(index, path)
    return path
