# Copyright 2024 Plaseek Authors
# SPDX-License-Identifier: Apache-2.0
"""Tests for the plaseek.models.config_schema module."""
import pytest
from pydantic import ValidationError

from plaseek.models import config_schema


def test_Config_defaults():
    """Tests that an empty config takes every default."""
    config = config_schema.Config()
    assert config.filterbank.n_channels == 7
    assert config.filterbank.sample_rate == 32000
    assert config.codebook.size == 128
    assert config.index.window_frames == 1500
    assert config.index.segments == 1000
    assert config.index.sigma == 0.9
    assert config.index.block == 50
    assert config.index.dynseg == "coarse"
    assert config.search.theta == 85.0
    assert config.search.mode == "proposed"
    assert config.synthetic.duration_s == 3600.0


def test_FilterbankConfig(subtests):
    """Tests for FilterbankConfig."""
    with subtests.test("Aliases and field names are both accepted"):
        by_alias = config_schema.FilterbankConfig(channels=5, q=4.0)
        by_name = config_schema.FilterbankConfig(n_channels=5, q_factor=4.0)
        assert by_alias == by_name
        assert by_alias.model_dump(by_alias=True)["channels"] == 5

    with subtests.test("Frame geometry in seconds"):
        config = config_schema.FilterbankConfig(hop_ms=10.0, window_ms=60.0)
        assert config.frame_hop == pytest.approx(0.01)
        assert config.frame_window == pytest.approx(0.06)

    with subtests.test("f_low must be below f_high"):
        with pytest.raises(ValidationError):
            config_schema.FilterbankConfig(f_low=800.0, f_high=400.0)

    with subtests.test("Window must cover the hop"):
        with pytest.raises(ValidationError):
            config_schema.FilterbankConfig(hop_ms=20.0, window_ms=10.0)

    with subtests.test("Unknown keys are rejected"):
        with pytest.raises(ValidationError):
            config_schema.FilterbankConfig(bands=7)


def test_CodebookConfig():
    """Tests that codebook sizes must be powers of 2."""
    assert config_schema.CodebookConfig(size=64).size == 64
    with pytest.raises(ValidationError):
        config_schema.CodebookConfig(size=3)


def test_IndexConfig(subtests):
    """Tests for IndexConfig."""
    with subtests.test("Contribution threshold in (0, 1]"):
        assert config_schema.IndexConfig(sigma=1.0).sigma == 1.0
        with pytest.raises(ValidationError):
            config_schema.IndexConfig(sigma=0.0)

    with subtests.test("Unknown segmentation method"):
        with pytest.raises(ValidationError):
            config_schema.IndexConfig(dynseg="greedy")

    with subtests.test("Block length must be positive"):
        with pytest.raises(ValidationError):
            config_schema.IndexConfig(block=0)


def test_SearchConfig():
    """Tests for SearchConfig."""
    assert config_schema.SearchConfig(mode="projected").mode == "projected"
    with pytest.raises(ValidationError):
        config_schema.SearchConfig(theta=-1.0)
    with pytest.raises(ValidationError):
        config_schema.SearchConfig(mode="fast")


def test_SyntheticConfig():
    """Tests that regime bounds must be ordered."""
    with pytest.raises(ValidationError):
        config_schema.SyntheticConfig(regime_min_s=30.0, regime_max_s=10.0)
    config = config_schema.SyntheticConfig(snr_db=20.0)
    assert config.snr_db == 20.0


def test_SyntheticConfig_defaults():
    """Tests that the default corpus plants each query once."""
    config = config_schema.SyntheticConfig()
    assert config.n_queries == 20
    assert config.query_duration_s == 15.0
    assert config.copies_per_query == 1
