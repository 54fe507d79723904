"""Datasets: IDX (MNIST) files, synthetic Gaussian blobs, subsetting, label noise."""

from __future__ import annotations

import gzip
import math
import os
import struct
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import IdxFormatError, IdxLengthError, ShapeError
from .numerics import RngStream, shuffle_indices

__all__ = [
    "Dataset",
    "RawIdxTensor",
    "load_idx",
    "write_idx",
    "to_dataset",
    "synth_blobs",
    "corrupt_labels",
    "subset",
    "take",
    "data_dir",
]

IDX_UBYTE = 0x08
GZIP_MAGIC = b"\x1f\x8b"


@dataclass(frozen=True)
class Dataset:
    inputs: np.ndarray
    labels: np.ndarray
    num_classes: int

    def __post_init__(self):
        if self.inputs.ndim != 2:
            raise ShapeError(f"inputs must be n x d, got shape {self.inputs.shape}")
        if self.labels.shape != (self.inputs.shape[0],):
            raise ShapeError(f"{self.labels.shape[0]} labels for {self.inputs.shape[0]} inputs")
        if self.inputs.shape[0] < 1:
            raise ShapeError("dataset is empty")
        if self.labels.min() < 0 or self.labels.max() >= self.num_classes:
            raise ValueError(f"labels outside [0, {self.num_classes})")
        if not np.all(np.isfinite(self.inputs)):
            raise ValueError("inputs contain non-finite values")

    @property
    def n(self) -> int:
        return int(self.inputs.shape[0])

    @property
    def d(self) -> int:
        return int(self.inputs.shape[1])

    @property
    def K(self) -> int:
        return self.num_classes


@dataclass(frozen=True)
class RawIdxTensor:
    """An IDX payload of unsigned bytes, kept in its row-major shape."""

    array: np.ndarray

    @property
    def dims(self) -> tuple:
        return tuple(int(s) for s in self.array.shape)

    def tobytes(self) -> bytes:
        return self.array.tobytes()


def load_idx(path) -> RawIdxTensor:
    path = Path(path)
    raw = path.read_bytes()
    if raw[:2] == GZIP_MAGIC:
        raw = gzip.decompress(raw)
    if len(raw) < 4:
        raise IdxLengthError(f"{path}: file too short for an IDX header")
    if raw[0] != 0 or raw[1] != 0 or raw[2] != IDX_UBYTE:
        raise IdxFormatError(f"{path}: bad magic {raw[:4].hex()}")
    rank = raw[3]
    header = 4 + 4 * rank
    if len(raw) < header:
        raise IdxLengthError(f"{path}: truncated dimension header")
    dims = struct.unpack(f">{rank}I", raw[4:header])
    count = math.prod(dims)
    if len(raw) - header < count:
        raise IdxLengthError(f"{path}: expected {count} payload bytes, found {len(raw) - header}")
    arr = np.frombuffer(raw, dtype=np.uint8, count=count, offset=header).reshape(dims)
    return RawIdxTensor(arr.copy())


def write_idx(path, array, compress: bool | None = None) -> None:
    """Write a uint8 array as IDX; gzip when ``compress`` or the path ends in ``.gz``."""
    arr = np.ascontiguousarray(array, dtype=np.uint8)
    payload = bytes([0, 0, IDX_UBYTE, arr.ndim]) + struct.pack(f">{arr.ndim}I", *arr.shape) + arr.tobytes()
    path = Path(path)
    if compress is None:
        compress = path.suffix == ".gz"
    if compress:
        payload = gzip.compress(payload, mtime=0)
    path.write_bytes(payload)


def to_dataset(images: RawIdxTensor, labels: RawIdxTensor, num_classes: int = 10) -> Dataset:
    if images.dims[0] != labels.dims[0]:
        raise ShapeError(f"{images.dims[0]} images but {labels.dims[0]} labels")
    n = images.dims[0]
    X = images.array.reshape(n, -1).astype(np.float64) / 255.0
    y = labels.array.reshape(n).astype(np.int64)
    return Dataset(X, y, num_classes)


def synth_blobs(stream: RngStream, n: int, d: int, K: int, separation: float) -> Dataset:
    """``K`` unit-variance Gaussian clusters whose means are ``separation`` apart.

    For ``K <= d`` the means sit on scaled basis vectors, so every pair is
    exactly ``separation`` apart.  Otherwise they are spaced along the first
    axis, neighbours ``separation`` apart.  Class counts differ by at most one.
    """
    if n < K:
        raise ValueError(f"need n >= K, got n={n}, K={K}")
    if separation < 0:
        raise ValueError("separation must be non-negative")
    means = np.zeros((K, d))
    if K <= d:
        means[np.arange(K), np.arange(K)] = separation / np.sqrt(2.0)
    else:
        means[:, 0] = separation * (np.arange(K) - (K - 1) / 2.0)
    labels = (np.arange(n) % K)[shuffle_indices(stream, n)]
    X = means[labels] + stream.gen.standard_normal((n, d))
    return Dataset(X, labels.astype(np.int64), K)


def corrupt_labels(stream: RngStream, ds: Dataset, rate: float):
    """Replace ``floor(rate * n)`` labels with a uniformly drawn wrong class.

    Returns the new dataset and the sorted corrupted indices.
    """
    if not 0.0 <= rate <= 1.0:
        raise ValueError(f"corruption rate must be in [0, 1], got {rate}")
    count = int(math.floor(rate * ds.n + 1e-9))
    if count == 0:
        return ds, np.empty(0, dtype=np.int64)
    if ds.K < 2:
        raise ValueError("cannot corrupt labels with a single class")
    idx = np.sort(shuffle_indices(stream, ds.n)[:count])
    offsets = stream.gen.integers(1, ds.K, size=count)
    labels = ds.labels.copy()
    labels[idx] = (labels[idx] + offsets) % ds.K
    return replace(ds, labels=labels), idx


def take(ds: Dataset, idx) -> Dataset:
    idx = np.asarray(idx, dtype=np.int64)
    return Dataset(ds.inputs[idx], ds.labels[idx], ds.num_classes)


def subset(ds: Dataset, stream: RngStream, n_sub: int) -> Dataset:
    if not 1 <= n_sub <= ds.n:
        raise ShapeError(f"subset size {n_sub} not in [1, {ds.n}]")
    return take(ds, shuffle_indices(stream, ds.n)[:n_sub])


def data_dir() -> Path:
    return Path(os.environ.get("BCSC_DATA_DIR", "."))
