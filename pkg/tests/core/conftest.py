# Copyright 2024 Plaseek Authors
# SPDX-License-Identifier: Apache-2.0
"""Fixtures for core tests."""
import numpy as np
import pytest

from plaseek.core.pla import CovariancePrefix


@pytest.fixture(scope="module")
def two_regime_rows() -> np.ndarray:
    """Histogram-like rows whose dimension changes at row 140.

    Rows 0..139 lie on one line in the first two coordinates. Rows 140..299
    spread over the last five coordinates.

    Returns:
        np.ndarray: (300, 7) int32 matrix
    """
    generator = np.random.default_rng(3)
    rows = np.zeros((300, 7), dtype=np.int32)
    a = generator.integers(0, 3, size=140)
    rows[:140, 0] = a
    rows[:140, 1] = 2 - a
    rows[140:, 2:] = generator.integers(10, 21, size=(160, 5))
    return rows


@pytest.fixture(scope="module")
def two_regime_prefix(two_regime_rows: np.ndarray) -> CovariancePrefix:
    """Covariance prefix over the two-regime rows.

    Returns:
        CovariancePrefix: prefix table with a checkpoint on every row
    """
    return CovariancePrefix(two_regime_rows)
