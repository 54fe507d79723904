"""Per-block shuffled data streams for one epoch.

Each of the ``M`` blocks gets its own shuffled copy of the training indices.
Batch ``t`` of block ``j`` is the ``t``-th contiguous slice of stream ``j``,
so for a fixed block the batches are disjoint and cover every sample once.
All streams share the same number of batches, ``ceil(n / B)``; the last one
is short when ``B`` does not divide ``n``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import BatchError
from .numerics import RngStream, shuffle_indices

__all__ = ["EpochPlan", "make_epoch_plan", "next_batch", "num_batches"]


def num_batches(n: int, B: int) -> int:
    return -(-n // B)


@dataclass(frozen=True)
class EpochPlan:
    streams: tuple
    n: int
    batch_size: int

    @property
    def M(self) -> int:
        return len(self.streams)

    @property
    def t_max(self) -> int:
        return num_batches(self.n, self.batch_size)

    def batch(self, t: int, j: int) -> np.ndarray:
        return next_batch(self, t, j)

    def batches(self, j: int):
        for t in range(self.t_max):
            yield next_batch(self, t, j)


def make_epoch_plan(streams_rng: Sequence[RngStream], n: int, B: int, M: int) -> EpochPlan:
    if n < 1:
        raise BatchError(f"need n >= 1, got {n}")
    if B < 1 or B > n:
        raise BatchError(f"batch size must satisfy 1 <= B <= n, got B={B}, n={n}")
    if M < 1:
        raise BatchError(f"need M >= 1, got {M}")
    if len(streams_rng) != M:
        raise BatchError(f"expected {M} random streams, got {len(streams_rng)}")
    streams = []
    for rng in streams_rng:
        s = shuffle_indices(rng, n)
        s.setflags(write=False)
        streams.append(s)
    return EpochPlan(tuple(streams), int(n), int(B))


def next_batch(plan: EpochPlan, t: int, j: int) -> np.ndarray:
    if not 0 <= j < plan.M:
        raise IndexError(f"block index {j} out of range for M={plan.M}")
    if not 0 <= t < plan.t_max:
        raise IndexError(f"batch index {t} out of range for t_max={plan.t_max}")
    B = plan.batch_size
    return plan.streams[j][t * B:min((t + 1) * B, plan.n)]
