# Copyright 2024 Plaseek Authors
# SPDX-License-Identifier: Apache-2.0
"""Configuration constants for plaseek modules.

User-facing parameters (filterbank, codebook, index and search settings) are
read from the config file and validated by `plaseek.models.config_schema`.
The classes below hold the fixed defaults and file-format constants that the
library itself relies on.

The prefix-table memory budget can be overridden with the environment variable
`PLASEEK_PREFIX_BUDGET_MB`.
"""
import copy
import os
from typing import Any


# pylint: disable=too-few-public-methods
# pylint: disable=invalid-name
class BaseConfig:
    """Base Config."""

    @classmethod
    def get(cls, attribute: str) -> Any:
        """Returns the base config."""
        if hasattr(cls, attribute):
            return copy.deepcopy(getattr(cls, attribute))
        raise ValueError(f"{attribute} not found in {cls.__name__}")


class PLASEEK_CONFIG(BaseConfig):
    """Plaseek configuration."""

    # Valid log levels
    LOG_LEVELS = ("info", "debug", "warning", "error", "critical")

    # Exact histograms are reconstructed by sliding from anchors cached at
    # this stride (in window positions) during verification.
    ANCHOR_STRIDE = 4096

    # Memory budget for the covariance prefix table used by dynamic
    # segmentation. The checkpoint stride grows to keep the table below it.
    PREFIX_BUDGET_BYTES = (
        int(os.environ.get("PLASEEK_PREFIX_BUDGET_MB", "256")) * 1024 * 1024
    )

    # Relative slack added to the threshold before computing skip widths
    COMPRESSED_SLACK = 1e-9

    # Rows per chunk when sweeping histograms or quantizing features
    CHUNK_SIZE = 8192

    # Guard for the dynamic programming oracle: M * (2 * delta + 1) ** 2
    DP_MAX_EVALUATIONS = 10_000_000

    # Frame rate reported in JSON output when no filterbank config is given
    DEFAULT_FRAME_HOP_MS = 10.0


class INDEX_FORMAT(BaseConfig):
    """Binary index file format constants."""

    MAGIC = b"PLAI"
    VERSION = 1

    # Method tags stored in the header
    METHOD_TAGS = {"none": 0, "local": 1, "coarse": 2, "dp": 3}


class CODEBOOK_FORMAT(BaseConfig):
    """Binary codebook file format constants."""

    MAGIC = b"TSCB"
    VERSION = 1
