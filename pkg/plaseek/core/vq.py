# Copyright 2024 Plaseek Authors
# SPDX-License-Identifier: Apache-2.0
"""Vector quantization of base features with an LBG codebook."""
import hashlib
import logging
import struct
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from plaseek.config import CODEBOOK_FORMAT, PLASEEK_CONFIG
from plaseek.core.errors import (
    BadMagicError,
    ConfigError,
    FormatError,
    ShapeError,
    TrainingError,
    VersionMismatchError,
)
from plaseek.models.validations import check_power_of_2

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Codebook:
    """Codebook centroids, shape (n, dim)."""

    centroids: np.ndarray

    def __post_init__(self) -> None:
        if self.centroids.ndim != 2 or self.centroids.shape[0] < 1:
            raise ShapeError("Codebook needs a non-empty (n, dim) matrix.")
        if not np.all(np.isfinite(self.centroids)):
            raise TrainingError("Codebook centroids must be finite.")

    @property
    def size(self) -> int:
        """Number of codewords n."""
        return int(self.centroids.shape[0])

    @property
    def dim(self) -> int:
        """Dimension of every codeword."""
        return int(self.centroids.shape[1])

    def digest(self) -> bytes:
        """8-byte BLAKE2b digest identifying this codebook."""
        hasher = hashlib.blake2b(digest_size=8)
        hasher.update(struct.pack("<II", self.size, self.dim))
        hasher.update(self.centroids.astype("<f8").tobytes())
        return hasher.digest()


def code_dtype(n: int) -> np.dtype:
    """Smallest unsigned integer type holding codes in [0, n)."""
    return np.min_scalar_type(max(n - 1, 0))


def _assign(
    features: np.ndarray, centroids: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """Nearest centroid and squared distance for every feature row.

    Ties go to the smallest index.
    """
    chunk = PLASEEK_CONFIG.get("CHUNK_SIZE")
    labels = np.empty(len(features), dtype=np.int64)
    dist2 = np.empty(len(features))
    for start in range(0, len(features), chunk):
        block = features[start : start + chunk]
        diff = block[:, None, :] - centroids[None, :, :]
        d2 = np.einsum("ijk,ijk->ij", diff, diff)
        best = np.argmin(d2, axis=1)
        labels[start : start + chunk] = best
        dist2[start : start + chunk] = d2[np.arange(len(block)), best]
    return labels, dist2


def quantize(feature: np.ndarray, codebook: Codebook) -> int:
    """Index of the nearest codeword, smallest index on ties.

    Raises:
        ShapeError: if the feature dimension does not match the codebook
    """
    feature = np.asarray(feature, dtype=np.float64)
    if feature.shape != (codebook.dim,):
        raise ShapeError(
            f"Feature of shape {feature.shape} does not match codebook "
            f"dimension {codebook.dim}."
        )
    labels, _ = _assign(feature[None, :], codebook.centroids)
    return int(labels[0])


def quantize_sequence(features: np.ndarray, codebook: Codebook) -> np.ndarray:
    """Quantizes every row of `features`.

    Returns:
        Codeword indices in the smallest unsigned type that holds them.

    Raises:
        ShapeError: if the feature dimension does not match the codebook
    """
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[1] != codebook.dim:
        raise ShapeError(
            f"Features of shape {features.shape} do not match codebook "
            f"dimension {codebook.dim}."
        )
    labels, _ = _assign(features, codebook.centroids)
    return labels.astype(code_dtype(codebook.size))


@dataclass
class LbgTrainer:
    """Linde-Buzo-Gray training by repeated splitting and Lloyd iterations.

    Attributes:
        target_size: codebook size, a power of 2
        epsilon: split perturbation relative to the per-dimension std
        max_iters: Lloyd iteration cap per split level
        tol: relative distortion change that stops Lloyd iterations
        trace: mean distortion of every Lloyd iteration, per split level
    """

    target_size: int
    epsilon: float = 1e-3
    max_iters: int = 100
    tol: float = 1e-4
    trace: List[List[float]] = field(default_factory=list)

    def __post_init__(self) -> None:
        try:
            check_power_of_2(self.target_size)
        except ValueError as err:
            raise ConfigError(
                f"Codebook size {self.target_size}: {err}"
            ) from err

    def fit(self, features: np.ndarray) -> Codebook:
        """Trains a codebook on feature rows.

        Raises:
            TrainingError: if there are no features or fewer distinct
                features than codewords
        """
        features = np.asarray(features, dtype=np.float64)
        if features.ndim != 2 or len(features) == 0:
            raise TrainingError("Training needs a non-empty (L, dim) matrix.")
        distinct = len(np.unique(features, axis=0))
        if distinct < self.target_size:
            raise TrainingError(
                f"{distinct} distinct feature vectors cannot train "
                f"{self.target_size} codewords."
            )

        std = features.std(axis=0)
        perturbation = self.epsilon * np.where(std > 0.0, std, 1.0)
        centroids = features.mean(axis=0, keepdims=True)
        self.trace = []
        if self.target_size == 1:
            _, dist2 = _assign(features, centroids)
            self.trace.append([float(dist2.mean())])

        while len(centroids) < self.target_size:
            centroids = np.vstack(
                [centroids + perturbation, centroids - perturbation]
            )
            centroids = self._lloyd(features, centroids)
            logger.debug(
                "LBG level %d: distortion %.6g after %d iterations.",
                len(centroids),
                self.trace[-1][-1],
                len(self.trace[-1]),
            )
        logger.info(
            "Trained %d-codeword codebook on %d features.",
            len(centroids),
            len(features),
        )
        return Codebook(centroids=centroids)

    def _lloyd(self, features: np.ndarray, centroids: np.ndarray) -> np.ndarray:
        level: List[float] = []
        self.trace.append(level)
        n = len(centroids)
        previous = np.inf
        for _ in range(self.max_iters):
            labels, dist2 = _assign(features, centroids)
            distortion = float(dist2.mean())
            level.append(distortion)
            if (
                np.isfinite(previous)
                and previous - distortion <= self.tol * previous
            ):
                break
            previous = distortion

            counts = np.bincount(labels, minlength=n)
            for empty in np.flatnonzero(counts == 0):
                self._reseed(labels, dist2, counts, int(empty))
            sums = np.zeros_like(centroids)
            np.add.at(sums, labels, features)
            centroids = sums / counts[:, None]
        return centroids

    @staticmethod
    def _reseed(
        labels: np.ndarray, dist2: np.ndarray, counts: np.ndarray, empty: int
    ) -> None:
        """Moves the farthest member of the largest cell into `empty`."""
        donor = int(np.argmax(counts))
        members = np.flatnonzero(labels == donor)
        farthest = members[np.argmax(dist2[members])]
        labels[farthest] = empty
        dist2[farthest] = 0.0
        counts[donor] -= 1
        counts[empty] = 1


def train_lbg(
    features: np.ndarray,
    target_size: int,
    epsilon: float = 1e-3,
    max_iters: int = 100,
    tol: float = 1e-4,
) -> Codebook:
    """Trains an LBG codebook of `target_size` codewords.

    Raises:
        ConfigError: if `target_size` is not a power of 2
        TrainingError: if there are fewer distinct features than codewords
    """
    trainer = LbgTrainer(
        target_size=target_size, epsilon=epsilon, max_iters=max_iters, tol=tol
    )
    return trainer.fit(features)


def save_codebook(codebook: Codebook, path: str) -> None:
    """Writes a codebook in the TSCB binary format."""
    with open(path, "wb") as out_file:
        out_file.write(CODEBOOK_FORMAT.get("MAGIC"))
        out_file.write(
            struct.pack(
                "<III",
                CODEBOOK_FORMAT.get("VERSION"),
                codebook.size,
                codebook.dim,
            )
        )
        out_file.write(codebook.centroids.astype("<f8").tobytes())


def load_codebook(path: str) -> Codebook:
    """Reads a codebook written by `save_codebook`.

    Raises:
        BadMagicError: if the file is not a codebook
        VersionMismatchError: if the format version is unsupported
        FormatError: if the file is truncated or has trailing bytes
    """
    with open(path, "rb") as in_file:
        payload = in_file.read()
    if payload[:4] != CODEBOOK_FORMAT.get("MAGIC"):
        raise BadMagicError(f"{path} is not a codebook file.")
    if len(payload) < 16:
        raise FormatError(f"{path}: truncated codebook header.")
    version, n, dim = struct.unpack("<III", payload[4:16])
    if version != CODEBOOK_FORMAT.get("VERSION"):
        raise VersionMismatchError(
            f"{path}: codebook version {version}, expected "
            f"{CODEBOOK_FORMAT.get('VERSION')}."
        )
    if len(payload) != 16 + 8 * n * dim:
        raise FormatError(
            f"{path}: expected {16 + 8 * n * dim} bytes, found {len(payload)}."
        )
    values = np.frombuffer(payload, dtype="<f8", offset=16).astype(np.float64)
    return Codebook(centroids=values.reshape(n, dim))
