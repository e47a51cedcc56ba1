# Copyright 2024 Plaseek Authors
# SPDX-License-Identifier: Apache-2.0
"""Models for the plaseek config file.

A config file is YAML, JSON or TOML with the optional top-level sections
`filterbank`, `codebook`, `index`, `search` and `synthetic`. Missing sections
and keys take the defaults below, so an empty file is a valid config.
"""
from typing import Literal, Optional

from pydantic import BaseModel, Field, field_validator, model_validator

from plaseek.models.validations import (
    check_contribution_threshold,
    check_power_of_2,
)

DynsegMethod = Literal["none", "local", "coarse", "dp"]
SearchMode = Literal["proposed", "projected", "tas", "bruteforce"]


class FilterbankConfig(BaseModel, extra="forbid", populate_by_name=True):
    """Band-pass filterbank and framing parameters for base features."""

    n_channels: int = Field(
        7,
        alias="channels",
        ge=1,
        description="Number of band-pass channels.",
    )
    q_factor: float = Field(
        10.0,
        alias="q",
        gt=0.0,
        description="Quality factor; bandwidth is center frequency / q.",
    )
    f_low: float = Field(
        100.0, gt=0.0, description="Center frequency of the lowest channel."
    )
    f_high: float = Field(
        6400.0, gt=0.0, description="Center frequency of the highest channel."
    )
    hop_ms: float = Field(10.0, gt=0.0, description="Frame hop.")
    window_ms: float = Field(60.0, gt=0.0, description="Frame window.")
    sample_rate: int = Field(
        32000,
        gt=0,
        description="Expected sample rate of input audio; no resampling.",
    )

    @model_validator(mode="after")
    def check_ranges(self) -> "FilterbankConfig":
        """Validates frequency ordering and frame geometry."""
        if not self.f_low < self.f_high:
            raise ValueError("f_low must be below f_high")
        if self.window_ms < self.hop_ms:
            raise ValueError("window_ms must be at least hop_ms")
        return self

    @property
    def frame_hop(self) -> float:
        """Frame hop in seconds."""
        return self.hop_ms / 1000.0

    @property
    def frame_window(self) -> float:
        """Frame window in seconds."""
        return self.window_ms / 1000.0


class CodebookConfig(BaseModel, extra="forbid"):
    """LBG codebook training parameters."""

    size: int = Field(128, description="Number of codewords (power of 2).")
    epsilon: float = Field(
        1e-3,
        gt=0.0,
        description="Split perturbation relative to per-dimension std.",
    )
    max_iters: int = Field(100, ge=1)
    tol: float = Field(1e-4, gt=0.0)

    @field_validator("size")
    @classmethod
    def power_of_2(cls, value: int) -> int:
        """Validates that the codebook size is a power of 2."""
        return check_power_of_2(value)


class IndexConfig(BaseModel, extra="forbid"):
    """Index construction parameters."""

    window_frames: int = Field(1500, ge=1, description="Window length W.")
    segments: int = Field(1000, ge=1, description="Number of segments M.")
    sigma: float = Field(0.9, description="Contribution threshold.")
    delta: int = Field(500, ge=0, description="Shiftable range width.")
    block: int = Field(50, ge=1, description="Sampling block length a.")
    dynseg: DynsegMethod = "coarse"

    @field_validator("sigma")
    @classmethod
    def contribution(cls, value: float) -> float:
        """Validates the contribution threshold."""
        return check_contribution_threshold(value)


class SearchConfig(BaseModel, extra="forbid"):
    """Search parameters."""

    theta: float = Field(85.0, ge=0.0, description="Search threshold.")
    mode: SearchMode = "proposed"


class SyntheticConfig(BaseModel, extra="forbid"):
    """Parameters of the synthetic corpus generator."""

    duration_s: float = Field(3600.0, gt=0.0)
    regime_min_s: float = Field(20.0, gt=0.0)
    regime_max_s: float = Field(120.0, gt=0.0)
    tones_per_regime: int = Field(4, ge=1)
    n_queries: int = Field(20, ge=0)
    query_duration_s: float = Field(15.0, gt=0.0)
    copies_per_query: int = Field(1, ge=1)
    snr_db: Optional[float] = Field(
        None, description="Additive noise level of planted copies."
    )

    @model_validator(mode="after")
    def check_regimes(self) -> "SyntheticConfig":
        """Validates regime duration bounds."""
        if self.regime_max_s < self.regime_min_s:
            raise ValueError("regime_max_s must be at least regime_min_s")
        return self


class Config(BaseModel, extra="forbid"):
    """Top-level config file model."""

    filterbank: FilterbankConfig = Field(default_factory=FilterbankConfig)
    codebook: CodebookConfig = Field(default_factory=CodebookConfig)
    index: IndexConfig = Field(default_factory=IndexConfig)
    search: SearchConfig = Field(default_factory=SearchConfig)
    synthetic: SyntheticConfig = Field(default_factory=SyntheticConfig)
