"""Random cyclic block structure over parameter coordinates.

A partition is a random permutation of ``0..m-1`` cut into ``M`` contiguous
runs; run ``j`` is the coordinate set of block ``j``.  The permutation and
selection matrices of the method are never formed, only these index sets.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PartitionError, ShapeError
from .numerics import RngStream, shuffle_indices

__all__ = [
    "BlockPartition",
    "make_partition",
    "block_sizes",
    "block_coords",
    "apply_block_update",
    "block_restriction",
]


def block_sizes(m: int, M: int) -> np.ndarray:
    """Balanced sizes: the first ``m % M`` blocks get one extra coordinate."""
    if M < 1 or M > m:
        raise PartitionError(f"need 1 <= M <= m, got M={M}, m={m}")
    sizes = np.full(M, m // M, dtype=np.int64)
    sizes[: m % M] += 1
    return sizes


@dataclass(frozen=True)
class BlockPartition:
    perm: np.ndarray
    sizes: np.ndarray
    offsets: np.ndarray

    @classmethod
    def from_perm(cls, perm, M: int) -> "BlockPartition":
        perm = np.asarray(perm, dtype=np.int64)
        m = perm.shape[0]
        sizes = block_sizes(m, M)
        offsets = np.zeros(M + 1, dtype=np.int64)
        np.cumsum(sizes, out=offsets[1:])
        perm.setflags(write=False)
        sizes.setflags(write=False)
        offsets.setflags(write=False)
        return cls(perm, sizes, offsets)

    @property
    def m(self) -> int:
        return int(self.perm.shape[0])

    @property
    def M(self) -> int:
        return int(self.sizes.shape[0])

    def coords(self, j: int) -> np.ndarray:
        return block_coords(self, j)


def make_partition(stream: RngStream, m: int, M: int) -> BlockPartition:
    """Draw a uniform permutation of ``m`` coordinates and split it into ``M`` blocks."""
    if M < 1 or M > m:
        raise PartitionError(f"need 1 <= M <= m, got M={M}, m={m}")
    return BlockPartition.from_perm(shuffle_indices(stream, m), M)


def block_coords(p: BlockPartition, j: int) -> np.ndarray:
    if not 0 <= j < p.M:
        raise IndexError(f"block index {j} out of range for M={p.M}")
    return p.perm[p.offsets[j]:p.offsets[j + 1]]


def block_restriction(w: np.ndarray, p: BlockPartition, j: int) -> np.ndarray:
    """``w`` with every coordinate outside block ``j`` set to zero."""
    out = np.zeros_like(w)
    idx = block_coords(p, j)
    out[idx] = w[idx]
    return out


def apply_block_update(w: np.ndarray, p: BlockPartition, j: int, step: np.ndarray) -> np.ndarray:
    """Return ``w`` with ``w[c] - step[c]`` on the coordinates of block ``j``.

    Every coordinate outside the block is copied through untouched.
    """
    w = np.asarray(w, dtype=np.float64)
    step = np.asarray(step, dtype=np.float64)
    if w.shape != step.shape or w.ndim != 1:
        raise ShapeError(f"shape mismatch: w {w.shape}, step {step.shape}")
    if w.shape[0] != p.m:
        raise ShapeError(f"partition is over {p.m} coordinates, w has {w.shape[0]}")
    idx = block_coords(p, j)
    out = w.copy()
    out[idx] = w[idx] - step[idx]
    return out
