"""Seedable labeled random streams and flat parameter-vector helpers.

Every random decision in a training run draws from a stream identified by
``(master_seed, label)``.  The label is hashed together with the seed into a
128-bit Philox key, so two streams with different labels are independent
counter-based sequences and a rerun with the same inputs replays the same
numbers on any platform.
"""

from __future__ import annotations

import hashlib

import numpy as np

from . import _kernels
from .errors import EmptyInputError, ShapeError

__all__ = [
    "RngStream",
    "derive_stream",
    "shuffle_indices",
    "as_flat",
    "check_finite",
]

_SEED_MASK = (1 << 64) - 1


def _philox_key(master_seed: int, label: str) -> int:
    h = hashlib.blake2b(digest_size=16, person=b"bcsc-stream")
    h.update((master_seed & _SEED_MASK).to_bytes(8, "little"))
    h.update(label.encode("utf-8"))
    return int.from_bytes(h.digest(), "little")


class RngStream:
    """A deterministic random stream keyed by a master seed and a text label.

    ``gen`` is a :class:`numpy.random.Generator` on a Philox bit generator.
    :meth:`reset` rewinds the stream to its first draw.
    """

    __slots__ = ("master_seed", "label", "gen")

    def __init__(self, master_seed: int, label: str):
        if not label:
            raise ValueError("stream label must be non-empty")
        if master_seed < 0 or master_seed > _SEED_MASK:
            raise ValueError(f"master_seed must fit in 64 unsigned bits, got {master_seed}")
        self.master_seed = int(master_seed)
        self.label = label
        self.reset()

    def reset(self) -> "RngStream":
        key = _philox_key(self.master_seed, self.label)
        self.gen = np.random.Generator(np.random.Philox(key=key))
        return self

    def child(self, suffix: str) -> "RngStream":
        return RngStream(self.master_seed, f"{self.label}/{suffix}")

    def __repr__(self) -> str:
        return f"RngStream(master_seed={self.master_seed}, label={self.label!r})"


def derive_stream(master_seed: int, label: str) -> RngStream:
    return RngStream(master_seed, label)


def shuffle_indices(stream: RngStream, n: int) -> np.ndarray:
    """Uniform random permutation of ``0..n-1`` by Fisher-Yates.

    Swap positions are drawn in one vectorized call (``j_i`` uniform on
    ``[0, i]`` for ``i = n-1 .. 1``) and the swaps are applied by the
    compiled kernel.
    """
    n = int(n)
    if n <= 0:
        raise EmptyInputError("cannot shuffle an empty index set")
    perm = np.arange(n, dtype=np.int64)
    if n == 1:
        return perm
    highs = np.arange(n, 1, -1, dtype=np.int64)
    draws = stream.gen.integers(0, highs, dtype=np.int64)
    _kernels.fisher_yates(perm, draws)
    return perm


def as_flat(values, length: int | None = None) -> np.ndarray:
    """Coerce to a contiguous 1-D float64 array, checking length and finiteness."""
    arr = np.ascontiguousarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ShapeError(f"expected a flat vector, got shape {arr.shape}")
    if length is not None and arr.shape[0] != length:
        raise ShapeError(f"expected length {length}, got {arr.shape[0]}")
    check_finite(arr)
    return arr


def check_finite(arr: np.ndarray, what: str = "vector") -> None:
    if not np.all(np.isfinite(arr)):
        raise FloatingPointError(f"{what} contains non-finite entries")
