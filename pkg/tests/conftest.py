# Copyright 2024 Plaseek Authors
# SPDX-License-Identifier: Apache-2.0
"""Plaseek test fixtures."""
import os
from typing import Callable, Dict

import numpy as np
import pytest
from click.testing import CliRunner
from scipy.io import wavfile

from plaseek import Runner
from plaseek.core.index_io import PLIndex, build_index
from plaseek.core.synthetic import CodewordCorpus, codeword_corpus
from plaseek.models.config_schema import IndexConfig
from plaseek.utils.io import read_json

CONF_DIRECTORY = os.path.join(os.path.dirname(__file__), "conf")
SMALL_BINS = 16
SMALL_WINDOW = 200


class FunctionOracle:
    """Oracle answering from a closed-form rank function."""

    def __init__(self, n_positions: int, rank: Callable[[int, int], int]):
        self.n_positions = n_positions
        self.rank = rank
        self.probes = 0

    def probe(self, t_i: int, t_j: int) -> int:
        self.probes += 1
        return self.rank(t_i, t_j)

    def dimension(self, t_i: int, t_j: int) -> int:
        return self.rank(t_i, t_j)


def regime_change(change: int, left: int = 1, right: int = 5):
    """Rank function of a trajectory whose structure changes at `change`.

    Ranges left of the change have rank `left`, ranges right of it rank
    `right`, and ranges straddling it one more than the larger.
    """

    def rank(t_i: int, t_j: int) -> int:
        if t_j <= change:
            return left
        if t_i >= change:
            return right
        return max(left, right) + 1

    return rank


@pytest.fixture(scope="module")
def conf_directory():
    """Config directory fixture.

    Returns:
        str: Path to config directory
    """
    return CONF_DIRECTORY


@pytest.fixture(scope="module")
def test_config_file(conf_directory: str):
    """Small-corpus config file fixture.

    Returns:
        str: Path to config file
    """
    return os.path.join(conf_directory, "test_config.yml")


@pytest.fixture
def rng():
    """Seeded random generator.

    Returns:
        np.random.Generator: generator with a fixed seed
    """
    return np.random.default_rng(20240517)


@pytest.fixture
def write_wav(tmp_path) -> Callable[..., str]:
    """Factory writing int16 WAV files into a temporary directory.

    Returns:
        Callable: `write_wav(name, data, sample_rate=32000)` returning the
        file path
    """

    def _write_wav(name: str, data: np.ndarray, sample_rate: int = 32000):
        path = str(tmp_path / name)
        wavfile.write(path, sample_rate, data)
        return path

    return _write_wav


@pytest.fixture(scope="module")
def small_corpus() -> CodewordCorpus:
    """Piecewise-stationary codewords with two planted copies per query.

    Returns:
        CodewordCorpus: 6000 stored frames over 16 codewords and two
        300-frame queries
    """
    return codeword_corpus(
        seed=11,
        length=6000,
        n_bins=SMALL_BINS,
        query_length=300,
        n_queries=2,
        copies=2,
    )


@pytest.fixture(scope="module")
def small_index_config() -> IndexConfig:
    """Index parameters sized for the small corpus.

    Returns:
        IndexConfig: W=200, M=12, coarse-to-fine segmentation
    """
    return IndexConfig(
        window_frames=SMALL_WINDOW,
        segments=12,
        sigma=0.9,
        delta=20,
        block=10,
        dynseg="coarse",
    )


@pytest.fixture(scope="module")
def small_index(
    small_corpus: CodewordCorpus, small_index_config: IndexConfig
) -> PLIndex:
    """Index over the small corpus.

    Returns:
        PLIndex: built index
    """
    return build_index(
        small_corpus.stored, small_index_config, SMALL_BINS, b"smallcb\x00"
    )


@pytest.fixture(scope="session")
def audio_workspace(tmp_path_factory) -> Dict:
    """Synthetic audio corpus with a trained codebook and built index.

    Generated once per session from `conf/test_config.yml` with seed 5.

    Returns:
        dict: paths (`dir`, `config`, `stored`, `codebook`, `index`,
        `queries`) and the decoded ground truth under `truth`
    """
    base = tmp_path_factory.mktemp("audio")
    config = os.path.join(CONF_DIRECTORY, "test_config.yml")
    runner = Runner(config_file=config, seed=5)
    corpus_dir = str(base / "corpus")
    truth_path = runner.generate(corpus_dir)
    truth = read_json(truth_path)
    stored = os.path.join(corpus_dir, truth["stored"])
    codebook = str(base / "codebook.bin")
    index = str(base / "index.bin")
    runner.build_codebook([stored], codebook)
    runner.build_index(stored, codebook, index)
    return {
        "dir": str(base),
        "config": config,
        "stored": stored,
        "codebook": codebook,
        "index": index,
        "queries": {
            os.path.splitext(name)[0]: os.path.join(corpus_dir, name)
            for name in truth["queries"]
        },
        "truth": truth,
    }


@pytest.fixture
def cli_runner() -> CliRunner:
    """Click test runner.

    Returns:
        CliRunner: runner whose output holds stdout and stderr
    """
    return CliRunner()
