# Copyright 2024 Plaseek Authors
# SPDX-License-Identifier: Apache-2.0
"""Audio decoding and filterbank base features.

A base feature is the per-channel mean squared output of a bank of
second-order IIR band-pass filters, computed every `hop` over a `window`.
Filters run continuously over the whole signal; framing applies to the
filtered output.
"""
import logging
import math
import os
import struct
import warnings
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import signal as sps
from scipy.io import wavfile

from plaseek.core.errors import (
    ConfigError,
    DecodeError,
    EmptyInputError,
    FormatError,
)
from plaseek.models.config_schema import FilterbankConfig

logger = logging.getLogger(__name__)

_WAVE_FORMAT_PCM = 0x0001
_WAVE_FORMAT_EXTENSIBLE = 0xFFFE


@dataclass(frozen=True)
class PcmSignal:
    """Mono signal with samples in [-1, 1]."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self) -> None:
        if self.sample_rate <= 0:
            raise ConfigError("Sample rate must be positive.")
        if not np.all(np.isfinite(self.samples)):
            raise FormatError("Signal contains non-finite samples.")

    @property
    def duration(self) -> float:
        """Duration in seconds."""
        return len(self.samples) / self.sample_rate


@dataclass(frozen=True)
class FilterBank:
    """Second-order band-pass sections, one row per channel."""

    centers: np.ndarray
    b: np.ndarray
    a: np.ndarray
    sample_rate: int
    q_factor: float

    @property
    def n_channels(self) -> int:
        """Number of channels."""
        return len(self.centers)

    @property
    def bandwidths(self) -> np.ndarray:
        """-3 dB bandwidth of every channel in Hz."""
        return self.centers / self.q_factor


@dataclass(frozen=True)
class BaseFeatureSeq:
    """Per-frame filterbank energies, shape (frame_count, n_channels)."""

    features: np.ndarray
    hop: float
    window: float
    sample_rate: int

    @property
    def frame_count(self) -> int:
        """Number of frames L."""
        return int(self.features.shape[0])

    @property
    def n_channels(self) -> int:
        """Feature dimension."""
        return int(self.features.shape[1])


def _read_wav_format(path: str) -> Tuple[int, int, int]:
    """Reads format tag, channel count and bit depth of a RIFF/WAVE file.

    Raises:
        FormatError: if the file is not RIFF/WAVE or is truncated
    """
    file_size = os.path.getsize(path)
    with open(path, "rb") as wav_file:
        header = wav_file.read(12)
        if (
            len(header) < 12
            or header[:4] != b"RIFF"
            or header[8:12] != b"WAVE"
        ):
            raise FormatError(f"{path} is not a RIFF/WAVE file.")
        (riff_size,) = struct.unpack("<I", header[4:8])
        if riff_size + 8 > file_size:
            raise FormatError(
                f"{path} is truncated: header declares {riff_size + 8} "
                f"bytes, file has {file_size}."
            )
        while True:
            chunk = wav_file.read(8)
            if len(chunk) < 8:
                raise FormatError(f"{path} has no fmt chunk.")
            chunk_id, chunk_size = chunk[:4], struct.unpack("<I", chunk[4:])[0]
            if chunk_id != b"fmt ":
                wav_file.seek(chunk_size + chunk_size % 2, os.SEEK_CUR)
                continue
            body = wav_file.read(chunk_size)
            if len(body) < 16:
                raise FormatError(f"{path} has a short fmt chunk.")
            format_tag, channels = struct.unpack("<HH", body[:4])
            (bits,) = struct.unpack("<H", body[14:16])
            if format_tag == _WAVE_FORMAT_EXTENSIBLE and len(body) >= 26:
                (format_tag,) = struct.unpack("<H", body[24:26])
            return format_tag, channels, bits


def decode_wav(path: str) -> PcmSignal:
    """Decodes a 16-bit PCM WAV file to a mono signal.

    Stereo input is downmixed by averaging the two channels. Samples are
    scaled by 1/32768.

    Args:
        path: path to the WAV file

    Returns:
        Decoded mono signal.

    Raises:
        FormatError: if the file is not RIFF/WAVE or is truncated
        DecodeError: if the encoding is not 16-bit PCM mono or stereo
    """
    format_tag, channels, bits = _read_wav_format(path)
    if format_tag != _WAVE_FORMAT_PCM or bits != 16:
        raise DecodeError(
            f"{path}: unsupported encoding (format tag {format_tag:#06x}, "
            f"{bits} bits); only 16-bit PCM is supported."
        )
    if channels not in (1, 2):
        raise DecodeError(f"{path}: {channels} channels, expected 1 or 2.")

    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", wavfile.WavFileWarning)
            sample_rate, data = wavfile.read(path)
    except (ValueError, wavfile.WavFileWarning) as err:
        raise FormatError(f"{path}: {err}") from err

    if data.dtype != np.int16:
        raise DecodeError(f"{path}: decoded sample type {data.dtype}.")
    samples = data.astype(np.float64)
    if samples.ndim == 2:
        samples = samples.mean(axis=1)
    samples /= 32768.0
    logger.debug(
        "Decoded %s: %d samples at %d Hz.", path, len(samples), sample_rate
    )
    return PcmSignal(samples=samples, sample_rate=int(sample_rate))


def encode_wav(pcm: PcmSignal, path: str) -> None:
    """Writes a mono signal as 16-bit PCM WAV, clipping to [-1, 1).

    Args:
        pcm: signal to write
        path: destination path
    """
    scaled = np.clip(np.round(pcm.samples * 32768.0), -32768, 32767)
    wavfile.write(path, pcm.sample_rate, scaled.astype(np.int16))


def design_filterbank(config: FilterbankConfig, sample_rate: int) -> FilterBank:
    """Designs log-spaced second-order band-pass filters.

    Centers are geometric between `f_low` and `f_high` inclusive; a single
    channel sits at `f_low`.

    Args:
        config: filterbank parameters
        sample_rate: sample rate the filters will run at

    Returns:
        Filter coefficients for every channel.

    Raises:
        ConfigError: if `f_high` is not below the Nyquist frequency
    """
    nyquist = sample_rate / 2.0
    if config.f_high >= nyquist:
        raise ConfigError(
            f"f_high={config.f_high} Hz must be below the Nyquist frequency "
            f"{nyquist} Hz."
        )
    if not 0.0 < config.f_low < config.f_high:
        raise ConfigError("Filterbank requires 0 < f_low < f_high.")

    centers = np.geomspace(config.f_low, config.f_high, config.n_channels)
    b = np.empty((config.n_channels, 3))
    a = np.empty((config.n_channels, 3))
    for channel, center in enumerate(centers):
        b[channel], a[channel] = sps.iirpeak(
            center, config.q_factor, fs=sample_rate
        )
    return FilterBank(
        centers=centers,
        b=b,
        a=a,
        sample_rate=sample_rate,
        q_factor=config.q_factor,
    )


def frame_geometry(
    n_samples: int, config: FilterbankConfig, sample_rate: int
) -> Tuple[int, int, int]:
    """Returns hop and window in samples and the resulting frame count.

    Raises:
        EmptyInputError: if the signal is shorter than one window
    """
    hop = int(round(config.frame_hop * sample_rate))
    win = int(round(config.frame_window * sample_rate))
    if hop < 1:
        raise ConfigError("Frame hop is shorter than one sample.")
    if n_samples < win:
        raise EmptyInputError(
            f"Signal has {n_samples} samples, one window needs {win}."
        )
    return hop, win, (n_samples - win) // hop + 1


def extract_base_features(
    pcm: PcmSignal, config: FilterbankConfig
) -> BaseFeatureSeq:
    """Computes per-frame mean squared filter output for every channel.

    Frame t covers samples [t * hop, t * hop + window). The signal is
    filtered chunk by chunk with carried filter state, and squared outputs
    are summed over blocks of gcd(hop, window) samples from which every
    frame is assembled.

    Args:
        pcm: input signal
        config: filterbank parameters

    Returns:
        Base features of shape (L, n_channels).

    Raises:
        EmptyInputError: if the signal is shorter than one window
    """
    bank = design_filterbank(config, pcm.sample_rate)
    n_samples = len(pcm.samples)
    hop, win, n_frames = frame_geometry(n_samples, config, pcm.sample_rate)
    grain = math.gcd(hop, win)
    n_blocks = ((n_frames - 1) * hop + win) // grain
    used = n_blocks * grain

    chunk = grain * max(1, (1 << 20) // grain)
    block_energy = np.empty((n_blocks, bank.n_channels))
    state = np.zeros((bank.n_channels, 2))
    for start in range(0, used, chunk):
        stop = min(start + chunk, used)
        piece = pcm.samples[start:stop]
        for channel in range(bank.n_channels):
            out, state[channel] = sps.lfilter(
                bank.b[channel], bank.a[channel], piece, zi=state[channel]
            )
            block_energy[start // grain : stop // grain, channel] = (
                np.square(out).reshape(-1, grain).sum(axis=1)
            )

    span = win // grain
    step = hop // grain
    windows = sliding_window_view(block_energy, span, axis=0)[::step]
    features = windows[:n_frames].sum(axis=2) / win
    logger.debug(
        "Extracted %d frames x %d channels (hop %d, window %d samples).",
        n_frames,
        bank.n_channels,
        hop,
        win,
    )
    return BaseFeatureSeq(
        features=np.ascontiguousarray(features),
        hop=config.frame_hop,
        window=config.frame_window,
        sample_rate=pcm.sample_rate,
    )
