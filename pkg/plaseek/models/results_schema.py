# Copyright 2024 Plaseek Authors
# SPDX-License-Identifier: Apache-2.0
"""Schema models for search results, ground truth and build statistics.

These models are what the CLI serializes to JSON. Matches are frozen so they
can be compared as sets across search modes.
"""
from typing import Dict, List, Optional

from pydantic import BaseModel, Field, field_validator


class Match(BaseModel, frozen=True):
    """A detection of the query at a window position of the stored stream."""

    position: int = Field(..., ge=0, description="Window start frame t_S.")
    distance: float = Field(..., ge=0.0, description="Histogram distance.")


class SearchParams(BaseModel, frozen=True):
    """Threshold and window length of a search."""

    theta: float = Field(..., ge=0.0, description="Search threshold.")
    window: int = Field(..., ge=1, description="Window length W in frames.")


class SearchCounters(BaseModel):
    """Work done by one search run."""

    full_distance_evaluations: int = 0
    compressed_evaluations: int = 0
    block_evaluations: int = 0
    block_skips: int = 0
    frames_skipped: int = 0
    positions_visited: int = 0
    query_cache_hits: int = 0
    query_cache_misses: int = 0


class SearchReport(BaseModel):
    """Matches and counters of one search run."""

    mode: str
    matches: List[Match] = Field(default_factory=list)
    counters: SearchCounters = Field(default_factory=SearchCounters)

    def positions(self) -> List[int]:
        """Returns matched positions in scan order."""
        return [match.position for match in self.matches]


class MatchRecord(BaseModel):
    """JSON output row for a match."""

    position_frames: int
    position_seconds: float
    distance: float


class SearchOutput(BaseModel):
    """JSON document written by `plaseek search --json`."""

    mode: str
    theta: float
    matches: List[MatchRecord]
    counters: SearchCounters


class Occurrence(BaseModel):
    """A planted copy of a query in a synthetic stored stream."""

    query: str
    position_frames: int = Field(..., ge=0)
    position_seconds: float = Field(..., ge=0.0)
    snr_db: Optional[float] = None


class GroundTruth(BaseModel):
    """Ground-truth file emitted next to a synthetic corpus."""

    seed: int
    sample_rate: int
    stored: str
    queries: List[str]
    occurrences: List[Occurrence]


class BuildStats(BaseModel):
    """Statistics written next to a built index."""

    method: str
    segments: int
    positions: int
    objective: float
    initial_objective: float
    probe_count: int
    average_dimension: float
    blocks: int
    build_seconds: float


class BenchResult(BaseModel):
    """Per-query benchmark outcome across search modes."""

    query: str
    theta: float
    matches: int
    seconds: Dict[str, float]
    counters: Dict[str, SearchCounters]
    speed_up: float = Field(..., gt=0.0)

    @field_validator("seconds")
    @classmethod
    def positive_times(cls, value: Dict[str, float]) -> Dict[str, float]:
        """Validates that wall times are positive."""
        for mode, seconds in value.items():
            if seconds <= 0.0:
                raise ValueError(f"Wall time for mode {mode} must be > 0")
        return value
