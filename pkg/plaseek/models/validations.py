# Copyright 2024 Plaseek Authors
# SPDX-License-Identifier: Apache-2.0
"""Functions for validation checks used in pydantic models."""


def check_power_of_2(x: int) -> int:
    """Check if the given integer is a power of 2.

    Args:
        x: integer to check

    Returns:
        The input integer if it is a power of 2.

    Raises:
        ValueError: if the input integer is not a power of 2.
    """
    if not ((x & (x - 1) == 0) and x > 0):
        raise ValueError("Value must be a power of 2")
    return x


def check_contribution_threshold(x: float) -> float:
    """Check that a contribution threshold lies in (0, 1].

    Args:
        x: threshold to check

    Returns:
        The input threshold if it is valid.

    Raises:
        ValueError: if the threshold is outside (0, 1].
    """
    if not 0.0 < x <= 1.0:
        raise ValueError("Contribution threshold must lie in (0, 1]")
    return x
