# Copyright 2024 Plaseek Authors
# SPDX-License-Identifier: Apache-2.0
"""Deterministic synthetic corpora with planted query copies.

Two generators share the same shape: a long piecewise-stationary stored
stream made of regimes of random duration, with copies of short query clips
written over it at non-overlapping positions.

- Codeword level: each regime draws codewords from its own sparse
  distribution, optionally mixed into a background shared by the whole
  corpus. Used to exercise indexing and search without audio.
- Audio level: each regime is a mix of slowly modulated tones over a noise
  floor. Every query clip starts with a short silence guard so the filterbank
  state has settled when the clip content begins, which makes a noiseless
  planted copy quantize exactly like the query.
"""
import logging
import math
import os
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from plaseek.core.errors import ConfigError
from plaseek.core.signal_features import PcmSignal, encode_wav
from plaseek.models.config_schema import FilterbankConfig, SyntheticConfig
from plaseek.models.results_schema import GroundTruth, Occurrence
from plaseek.utils.io import write_json

logger = logging.getLogger(__name__)

# Leading silence of every audio query clip, in seconds
QUERY_GUARD_S = 0.5


@dataclass
class CodewordCorpus:
    """Stored codewords, query codewords and planted (query, position)."""

    stored: np.ndarray
    queries: List[np.ndarray]
    occurrences: List[Tuple[int, int]]


def regime_lengths(
    rng: np.random.Generator, total: int, shortest: int, longest: int
) -> List[int]:
    """Random regime lengths in [shortest, longest] summing to total."""
    lengths: List[int] = []
    remaining = total
    while remaining > 0:
        size = int(rng.integers(shortest, longest + 1))
        lengths.append(min(size, remaining))
        remaining -= lengths[-1]
    return lengths


def piecewise_codes(
    rng: np.random.Generator,
    length: int,
    n_bins: int,
    regime_min: int,
    regime_max: int,
    support: int = 8,
    background: Optional[np.ndarray] = None,
    salience: float = 1.0,
) -> np.ndarray:
    """Codeword stream whose distribution changes at regime boundaries.

    Each regime draws from `support` codewords of its own. With a
    `background` distribution, a regime instead draws from that background
    mixed with its own codewords at weight `salience`.

    Raises:
        ConfigError: if salience is outside (0, 1] or below 1 without a
            background
    """
    if not 0.0 < salience <= 1.0:
        raise ConfigError(f"Salience must lie in (0, 1], got {salience}.")
    if salience < 1.0 and background is None:
        raise ConfigError("A salience below 1 needs a background.")
    support = min(support, n_bins)
    pieces = []
    for size in regime_lengths(rng, length, regime_min, regime_max):
        words = rng.choice(n_bins, size=support, replace=False)
        weights = rng.dirichlet(np.ones(support))
        if salience == 1.0:
            pieces.append(rng.choice(words, size=size, p=weights))
            continue
        p = (1.0 - salience) * background
        p[words] += salience * weights
        pieces.append(rng.choice(n_bins, size=size, p=p / p.sum()))
    return np.concatenate(pieces).astype(np.min_scalar_type(n_bins - 1))


def plant_positions(
    rng: np.random.Generator, total: int, clip: int, count: int
) -> List[int]:
    """Non-overlapping start positions of `count` clips of length `clip`.

    Raises:
        ConfigError: if the clips cannot fit
    """
    free = total - count * clip
    if free < 0:
        raise ConfigError(
            f"{count} clips of {clip} do not fit in a stream of {total}."
        )
    # Choosing the gaps keeps clips disjoint without rejection sampling.
    cuts = np.sort(rng.integers(0, free + 1, size=count))
    order = rng.permutation(count)
    starts = [int(cut) + rank * clip for rank, cut in enumerate(cuts)]
    return [starts[i] for i in order]


def codeword_corpus(
    seed: int,
    length: int,
    n_bins: int,
    query_length: int,
    n_queries: int = 2,
    copies: int = 2,
    regime_min: int = 200,
    regime_max: int = 1200,
    salience: float = 1.0,
) -> CodewordCorpus:
    """Piecewise-stationary codewords with exact planted query copies.

    With `salience` below 1, stored stream and queries share one broad
    background distribution that every regime mixes with its own codewords.
    """
    rng = np.random.default_rng(seed)
    background = None
    if salience < 1.0:
        background = rng.dirichlet(np.ones(n_bins))

    def regimes(size: int) -> np.ndarray:
        return piecewise_codes(
            rng,
            size,
            n_bins,
            regime_min,
            regime_max,
            background=background,
            salience=salience,
        )

    stored = regimes(length)
    queries = [regimes(query_length) for _ in range(n_queries)]
    positions = plant_positions(rng, length, query_length, n_queries * copies)
    occurrences = []
    for k, position in enumerate(positions):
        q = k // copies
        stored[position : position + query_length] = queries[q]
        occurrences.append((q, position))
    return CodewordCorpus(
        stored=stored, queries=queries, occurrences=sorted(occurrences)
    )


def _regime_audio(
    rng: np.random.Generator,
    n_samples: int,
    sample_rate: int,
    tones: int,
    f_low: float,
    f_high: float,
) -> np.ndarray:
    """Modulated tone mix over a noise floor, peak near 0.5."""
    t = np.arange(n_samples) / sample_rate
    mix = 0.01 * rng.standard_normal(n_samples)
    freqs = np.exp(rng.uniform(math.log(f_low), math.log(f_high), tones))
    for freq in freqs:
        rate = rng.uniform(0.1, 2.0)
        depth = rng.uniform(0.2, 0.9)
        envelope = 1.0 - depth * 0.5 * (
            1.0 + np.sin(2 * np.pi * rate * t + rng.uniform(0, 2 * np.pi))
        )
        phase = rng.uniform(0, 2 * np.pi)
        mix += rng.uniform(0.2, 1.0) * envelope * np.sin(
            2 * np.pi * freq * t + phase
        )
    return 0.5 * mix / max(1.0, float(np.max(np.abs(mix))))


def _add_noise(
    rng: np.random.Generator, clip: np.ndarray, snr_db: float
) -> np.ndarray:
    power = float(np.mean(np.square(clip)))
    noise_power = power / 10.0 ** (snr_db / 10.0)
    return clip + math.sqrt(noise_power) * rng.standard_normal(len(clip))


@dataclass
class AudioCorpus:
    """Stored signal, named query clips and their ground truth."""

    stored: PcmSignal
    queries: Dict[str, PcmSignal]
    truth: GroundTruth


def audio_corpus(
    seed: int,
    config: SyntheticConfig,
    filterbank: FilterbankConfig,
) -> AudioCorpus:
    """Generates a stored signal with planted copies of query clips.

    Planted copies start on frame boundaries. Ground-truth positions are the
    window position of each copy in frames.

    Raises:
        ConfigError: if the planted copies do not fit in the stored signal
    """
    rng = np.random.default_rng(seed)
    rate = filterbank.sample_rate
    hop = int(round(filterbank.frame_hop * rate))
    f_low = filterbank.f_low
    f_high = filterbank.f_high
    total = int(round(config.duration_s * rate))

    pieces = []
    shortest = int(config.regime_min_s * rate)
    longest = int(config.regime_max_s * rate)
    for size in regime_lengths(rng, total, shortest, longest):
        pieces.append(
            _regime_audio(
                rng, size, rate, config.tones_per_regime, f_low, f_high
            )
        )
    stored = np.concatenate(pieces)

    guard = int(round(QUERY_GUARD_S * rate))
    clip_len = guard + int(round(config.query_duration_s * rate))
    clip_len = -(-clip_len // hop) * hop
    queries = {}
    for q in range(config.n_queries):
        clip = np.zeros(clip_len)
        clip[guard:] = _regime_audio(
            rng,
            clip_len - guard,
            rate,
            config.tones_per_regime,
            f_low,
            f_high,
        )
        queries[f"query_{q:03d}"] = clip

    count = config.n_queries * config.copies_per_query
    slots = plant_positions(rng, total // hop, clip_len // hop, count)
    occurrences = []
    names = sorted(queries)
    for k, slot in enumerate(slots):
        name = names[k // config.copies_per_query]
        clip = queries[name]
        if config.snr_db is not None:
            clip = _add_noise(rng, clip, config.snr_db)
        start = slot * hop
        stored[start : start + clip_len] = clip
        occurrences.append(
            Occurrence(
                query=name,
                position_frames=slot,
                position_seconds=slot * filterbank.frame_hop,
                snr_db=config.snr_db,
            )
        )
    occurrences.sort(key=lambda o: (o.query, o.position_frames))
    truth = GroundTruth(
        seed=seed,
        sample_rate=rate,
        stored="stored.wav",
        queries=[f"{name}.wav" for name in names],
        occurrences=occurrences,
    )
    logger.info(
        "Generated %.1f s stored signal with %d planted copies of %d queries.",
        total / rate,
        count,
        len(queries),
    )
    return AudioCorpus(
        stored=PcmSignal(samples=stored, sample_rate=rate),
        queries={
            name: PcmSignal(samples=clip, sample_rate=rate)
            for name, clip in queries.items()
        },
        truth=truth,
    )


def write_corpus(corpus: AudioCorpus, out_dir: str) -> str:
    """Writes stored.wav, one WAV per query and ground_truth.json.

    Returns:
        Path of the ground-truth file.
    """
    os.makedirs(out_dir, exist_ok=True)
    encode_wav(corpus.stored, os.path.join(out_dir, corpus.truth.stored))
    for name, clip in corpus.queries.items():
        encode_wav(clip, os.path.join(out_dir, f"{name}.wav"))
    truth_path = os.path.join(out_dir, "ground_truth.json")
    write_json(corpus.truth, truth_path)
    return truth_path
