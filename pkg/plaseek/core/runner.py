# Copyright 2024 Plaseek Authors
# SPDX-License-Identifier: Apache-2.0
"""Submodule that runs the plaseek pipeline stages from config."""
import logging
import os
import time
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from plaseek.core import index_io, synthetic
from plaseek.core.bench import BENCH_MODES, bench_records, run_bench
from plaseek.core.config_loader import ConfigLoader
from plaseek.core.dynseg import (
    DimensionOracle,
    equi_partition,
    score,
    segment_trajectory,
)
from plaseek.core.errors import ConfigError, InstanceTooLargeError
from plaseek.core.histogram import histogram_matrix
from plaseek.core.index_io import IndexBuilder, PLIndex
from plaseek.core.pla import CovariancePrefix
from plaseek.core.search import search
from plaseek.core.signal_features import (
    BaseFeatureSeq,
    decode_wav,
    extract_base_features,
)
from plaseek.core.vq import (
    Codebook,
    LbgTrainer,
    load_codebook,
    quantize_sequence,
    save_codebook,
)
from plaseek.models.config_schema import Config, DynsegMethod, SearchMode
from plaseek.models.results_schema import (
    BenchResult,
    BuildStats,
    MatchRecord,
    SearchOutput,
)
from plaseek.utils.io import write_csv, write_json

logger = logging.getLogger(__name__)


class Runner:
    """Runs pipeline stages with a shared, validated config.

    Args:
        config_file: path to a YAML, JSON or TOML config file; defaults
            apply when omitted
        seed: seed for synthetic generation
        threads: worker count for the benchmark harness

    Attributes:
        config (Config): validated config, CLI overrides applied
        seed (int): seed for synthetic generation
        threads (int): worker count for the benchmark harness
    """

    def __init__(
        self,
        config_file: Optional[str] = None,
        seed: int = 0,
        threads: int = 1,
    ):
        """Loads the config."""
        self.config_file = config_file
        self.seed = seed
        self.threads = threads
        self.config = ConfigLoader(config_file=config_file).load_config()

    def override(self, section: str, **values: Any) -> Config:
        """Replaces config values, ignoring those passed as None.

        The merged section is validated again.

        Returns:
            The updated config.
        """
        updates = {k: v for k, v in values.items() if v is not None}
        if updates:
            current = getattr(self.config, section).model_dump(by_alias=False)
            current.update(updates)
            merged = self.config.model_dump(by_alias=False)
            merged[section] = current
            self.config = Config.model_validate(merged)
        return self.config

    def features(self, path: str) -> BaseFeatureSeq:
        """Decodes a WAV file and extracts base features.

        Raises:
            ConfigError: if the file's sample rate differs from the config
        """
        pcm = decode_wav(path)
        expected = self.config.filterbank.sample_rate
        if pcm.sample_rate != expected:
            raise ConfigError(
                f"{path} is sampled at {pcm.sample_rate} Hz, config expects "
                f"{expected} Hz; resample the input first."
            )
        return extract_base_features(pcm, self.config.filterbank)

    def codes(self, path: str, codebook: Codebook) -> np.ndarray:
        """Codeword sequence of a WAV file."""
        return quantize_sequence(self.features(path).features, codebook)

    def build_codebook(self, inputs: Sequence[str], out: str) -> Codebook:
        """Trains a codebook on the base features of all inputs."""
        cfg = self.config.codebook
        stacked = np.vstack([self.features(p).features for p in inputs])
        trainer = LbgTrainer(
            target_size=cfg.size,
            epsilon=cfg.epsilon,
            max_iters=cfg.max_iters,
            tol=cfg.tol,
        )
        codebook = trainer.fit(stacked)
        save_codebook(codebook, out)
        logger.info("Saved %d-codeword codebook to %s.", codebook.size, out)
        return codebook

    def build_index(
        self, stored: str, codebook_path: str, out: str
    ) -> Tuple[PLIndex, BuildStats]:
        """Builds and saves an index; writes build stats beside it."""
        codebook = load_codebook(codebook_path)
        codes = self.codes(stored, codebook)
        builder = IndexBuilder(
            self.config.index, codebook.size, codebook.digest()
        )
        index = builder.build(codes)
        index_io.save(index, out)
        assert builder.stats is not None
        write_json(builder.stats, f"{os.path.splitext(out)[0]}.stats.json")
        return index, builder.stats

    def load_index(self, path: str, codebook: Codebook) -> PLIndex:
        """Loads an index and checks it was built with `codebook`.

        Raises:
            ConfigError: if the codebook does not match the index
        """
        index = index_io.load(path)
        if index.codebook_digest != codebook.digest():
            raise ConfigError(
                f"Codebook digest {codebook.digest().hex()} does not match "
                f"index {path} ({index.codebook_digest.hex()})."
            )
        return index

    def search(
        self,
        index_path: str,
        codebook_path: str,
        query: str,
        theta: Optional[float] = None,
        mode: Optional[SearchMode] = None,
    ) -> SearchOutput:
        """Searches one query WAV file."""
        self.override("search", theta=theta, mode=mode)
        codebook = load_codebook(codebook_path)
        index = self.load_index(index_path, codebook)
        cfg = self.config.search
        report = search(index, self.codes(query, codebook), cfg.theta, cfg.mode)
        hop = self.config.filterbank.frame_hop
        return SearchOutput(
            mode=report.mode,
            theta=cfg.theta,
            matches=[
                MatchRecord(
                    position_frames=m.position,
                    position_seconds=m.position * hop,
                    distance=m.distance,
                )
                for m in report.matches
            ],
            counters=report.counters,
        )

    def generate(self, out_dir: str) -> str:
        """Generates a synthetic corpus; returns the ground-truth path."""
        corpus = synthetic.audio_corpus(
            self.seed, self.config.synthetic, self.config.filterbank
        )
        return synthetic.write_corpus(corpus, out_dir)

    def bench(
        self,
        index_path: str,
        codebook_path: str,
        queries: Sequence[str],
        thetas: Sequence[float],
        out: str,
        modes: Sequence[str] = BENCH_MODES,
        repeats: int = 1,
    ) -> List[BenchResult]:
        """Benchmarks all modes and writes one CSV row per query and theta."""
        codebook = load_codebook(codebook_path)
        index = self.load_index(index_path, codebook)
        query_codes = {
            os.path.splitext(os.path.basename(q))[0]: self.codes(q, codebook)
            for q in queries
        }
        results = run_bench(
            index,
            query_codes,
            thetas,
            modes=modes,
            threads=self.threads,
            repeats=repeats,
        )
        write_csv(bench_records(results), out)
        return results

    def trajectory(self, stored: str, codebook_path: str) -> np.ndarray:
        """All window histograms of a stored WAV file."""
        codebook = load_codebook(codebook_path)
        codes = self.codes(stored, codebook)
        return histogram_matrix(
            codes, self.config.index.window_frames, codebook.size
        )


def sweep_dimensions(
    rows: np.ndarray, segment_counts: Sequence[int], sigmas: Sequence[float]
) -> List[Dict[str, Any]]:
    """Average compressed dimension of equi-partitions per sigma and M."""
    prefix = CovariancePrefix(rows)
    records = []
    for sigma in sigmas:
        oracle = DimensionOracle(prefix, sigma)
        for segments in segment_counts:
            segments = min(segments, prefix.n_positions)
            scored = score(
                equi_partition(prefix.n_positions, segments).boundaries,
                oracle,
            )
            records.append(
                {
                    "sigma": sigma,
                    "segments": segments,
                    "average_dimension": scored.objective,
                    "n_bins": prefix.n_bins,
                }
            )
            logger.info(
                "sigma=%g, M=%d: average dimension %.3f.",
                sigma,
                segments,
                scored.objective,
            )
    return records


def sweep_dynseg(
    rows: np.ndarray,
    segments: int,
    deltas: Sequence[int],
    methods: Sequence[DynsegMethod],
    sigma: float,
) -> List[Dict[str, Any]]:
    """Objective, probe count and time per segmentation method and delta."""
    prefix = CovariancePrefix(rows)
    records = []
    for delta in deltas:
        for method in methods:
            oracle = DimensionOracle(prefix, sigma)
            began = time.perf_counter()
            try:
                result = segment_trajectory(method, segments, delta, oracle)
            except InstanceTooLargeError as err:
                logger.warning(
                    "Skipping %s at delta=%d: %s", method, delta, err
                )
                continue
            records.append(
                {
                    "method": method,
                    "delta": delta,
                    "segments": result.n_segments,
                    "objective": result.objective,
                    "probes": result.probes,
                    "seconds": time.perf_counter() - began,
                }
            )
    return records


def write_records(records: List[Dict[str, Any]], out: str) -> None:
    """Writes sweep records as CSV."""
    write_csv(records, out)
    logger.info("Wrote %d rows to %s.", len(records), out)
