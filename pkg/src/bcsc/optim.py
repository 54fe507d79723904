"""Epoch routines for SGD, BCD, SBC, RBC and BCSC.

All five share one per-coordinate step rule (weight decay, optional AdaGrad
scaling, heavy-ball momentum) applied through the kernels in ``_kernels``.
Momentum and AdaGrad buffers are full length; a block update reads and
writes only the entries of that block.

Random streams used in epoch ``e`` (1-based) of a run with seed ``s``::

    shuffle/j=<j>/epoch=<e>   data order of block j (j=0 for single-stream methods)
    perm/epoch=<e>            coordinate partition
    block/epoch=<e>           random block choices (BCD, SBC)

SGD and every block method with ``M = 1`` therefore see the same batches, which
makes their trajectories bitwise equal.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import ConfigError, DivergenceError, ScheduleError
from .numerics import derive_stream
from .partition import BlockPartition, block_coords, make_partition
from .scheduler import make_epoch_plan, num_batches

__all__ = [
    "METHODS",
    "Schedule",
    "OptimizerConfig",
    "OptimizerState",
    "EpochStats",
    "lr_at",
    "coordinate_step",
    "sgd_epoch",
    "bcd_epoch",
    "sbc_epoch",
    "rbc_epoch",
    "bcsc_epoch",
    "run_epoch",
    "BCD_MAX_SAMPLES",
]

METHODS = ("SGD", "BCD", "SBC", "RBC", "BCSC")
BCD_MAX_SAMPLES = 10_000


@dataclass(frozen=True)
class Schedule:
    """Piecewise-constant learning rate over 1-based epochs.

    ``pieces`` holds ``(first_epoch, last_epoch, lr)`` triples, contiguous
    from epoch 1.
    """

    pieces: tuple

    def __post_init__(self):
        if not self.pieces:
            raise ScheduleError("schedule has no pieces")
        expected = 1
        for first, last, lr in self.pieces:
            if first != expected or last < first:
                raise ScheduleError(f"schedule pieces must be contiguous from epoch 1; bad piece {first}-{last}")
            if not lr > 0:
                raise ScheduleError(f"learning rate must be positive, got {lr}")
            expected = last + 1

    @property
    def total_epochs(self) -> int:
        return self.pieces[-1][1]

    @classmethod
    def constant(cls, lr: float, epochs: int) -> "Schedule":
        return cls(((1, max(int(epochs), 1), float(lr)),))

    @classmethod
    def parse(cls, text: str) -> "Schedule":
        """Parse ``"1-100:0.1, 101-150:0.01, 151-200:0.001"``."""
        pieces = []
        for part in text.split(","):
            part = part.strip()
            if not part:
                continue
            m = re.fullmatch(r"(\d+)\s*-\s*(\d+)\s*:\s*(\S+)", part)
            if m is None:
                raise ScheduleError(f"cannot parse schedule piece {part!r}")
            try:
                lr = float(m.group(3))
            except ValueError:
                raise ScheduleError(f"bad learning rate in {part!r}") from None
            pieces.append((int(m.group(1)), int(m.group(2)), lr))
        return cls(tuple(pieces))

    def format(self) -> str:
        return ", ".join(f"{a}-{b}:{lr!r}" for a, b, lr in self.pieces)


STAIRCASE_SCHEDULE = Schedule(((1, 100, 0.1), (101, 150, 0.01), (151, 200, 0.001)))


def lr_at(s: Schedule, epoch: int) -> float:
    for first, last, lr in s.pieces:
        if first <= epoch <= last:
            return lr
    raise ScheduleError(f"epoch {epoch} is outside the schedule (1-{s.total_epochs})")


@dataclass(frozen=True)
class OptimizerConfig:
    method: str = "BCSC"
    M: int = 1
    batch_size: int = 128
    momentum: float = 0.9
    weight_decay: float = 5e-4
    schedule: Schedule = field(default_factory=lambda: STAIRCASE_SCHEDULE)
    adagrad: bool = False
    adagrad_eps: float = 1e-8

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if self.M < 1:
            raise ConfigError(f"M must be >= 1, got {self.M}")
        if self.method == "SGD" and self.M != 1:
            raise ConfigError("SGD uses a single block (M = 1)")
        if self.batch_size < 1:
            raise ConfigError(f"batch size must be >= 1, got {self.batch_size}")
        if not 0.0 <= self.momentum < 1.0:
            raise ConfigError(f"momentum must be in [0, 1), got {self.momentum}")
        if self.weight_decay < 0:
            raise ConfigError(f"weight decay must be >= 0, got {self.weight_decay}")
        if self.adagrad and not self.adagrad_eps > 0:
            raise ConfigError("adagrad_eps must be positive")

    def check_problem(self, m: int, n: int) -> None:
        """Validate against a concrete problem size."""
        if self.M > m:
            raise ConfigError(f"M={self.M} exceeds the parameter count {m}")
        if self.batch_size > n:
            raise ConfigError(f"batch size {self.batch_size} exceeds dataset size {n}")
        if self.method == "BCD" and n > BCD_MAX_SAMPLES:
            raise ConfigError(f"BCD takes full-data gradients; limited to n <= {BCD_MAX_SAMPLES}, got {n}")


@dataclass
class OptimizerState:
    velocity: np.ndarray
    accumulator: np.ndarray
    epoch: int = 0

    @classmethod
    def zeros(cls, m: int) -> "OptimizerState":
        return cls(np.zeros(m), np.zeros(m), 0)

    def effective_scale(self, lr: float, eps: float) -> np.ndarray:
        """Per-coordinate AdaGrad step scale ``lr / sqrt(acc + eps)``."""
        return lr / np.sqrt(self.accumulator + eps)


@dataclass
class EpochStats:
    epoch: int
    lr: float
    losses: np.ndarray
    oracle_calls: int

    @property
    def loss_mean(self) -> float:
        return float(np.mean(self.losses))

    @property
    def loss_std(self) -> float:
        with np.errstate(over="ignore"):
            return float(np.std(self.losses))


def coordinate_step(g_c, w_c, idx, state: OptimizerState, cfg: OptimizerConfig, lr: float) -> np.ndarray:
    """Step entries for the coordinates ``idx``; updates the state on ``idx`` only.

    ``g_c`` and ``w_c`` are the gradient and parameter values on ``idx``.
    The caller subtracts the result from ``w_c``.
    """
    idx = np.asarray(idx, dtype=np.int64)
    ghat = np.asarray(g_c, dtype=np.float64) + cfg.weight_decay * np.asarray(w_c, dtype=np.float64)
    if cfg.adagrad:
        acc = state.accumulator[idx] + ghat * ghat
        state.accumulator[idx] = acc
        scale = lr / np.sqrt(acc + cfg.adagrad_eps)
    else:
        scale = lr
    v = cfg.momentum * state.velocity[idx] + ghat
    state.velocity[idx] = v
    return scale * v


def _kernel_args(state, cfg, lr):
    return (state.velocity, state.accumulator, float(lr), float(cfg.momentum),
            float(cfg.weight_decay), bool(cfg.adagrad), float(cfg.adagrad_eps))


def _grad(oracle, w, batch, data, epoch, t, j=None):
    # overflow surfaces as a non-finite loss below
    with np.errstate(over="ignore", invalid="ignore"):
        loss, g = oracle.loss_and_grad(w, batch, data)
    if not np.isfinite(loss):
        raise DivergenceError(epoch, t, j, f"loss = {loss}")
    return loss, g


def _begin(w, data, cfg, state, method):
    if cfg.method != method:
        raise ConfigError(f"config method is {cfg.method}, called the {method} epoch routine")
    w = np.array(w, dtype=np.float64)
    cfg.check_problem(w.shape[0], data.n)
    epoch = state.epoch + 1
    return w, epoch, lr_at(cfg.schedule, epoch)


def _finish(w, state, epoch, lr, losses, calls):
    if not np.all(np.isfinite(w)):
        raise DivergenceError(epoch, detail="non-finite parameters")
    state.epoch = epoch
    return w, EpochStats(epoch, lr, np.asarray(losses), calls)


def _data_stream(seed, j, epoch):
    return derive_stream(seed, f"shuffle/j={j}/epoch={epoch}")


def _partition(seed, m, M, epoch) -> BlockPartition:
    return make_partition(derive_stream(seed, f"perm/epoch={epoch}"), m, M)


def sgd_epoch(oracle, w, data, cfg, state, seed: int, on_step=None):
    """One pass of mini-batch SGD over a single shuffled stream."""
    w, epoch, lr = _begin(w, data, cfg, state, "SGD")
    plan = make_epoch_plan([_data_stream(seed, 0, epoch)], data.n, cfg.batch_size, 1)
    args = _kernel_args(state, cfg, lr)
    losses = []
    for t in range(plan.t_max):
        loss, g = _grad(oracle, w, plan.batch(t, 0), data, epoch, t)
        losses.append(loss)
        _kernels.full_step(w, g, *args)
        if on_step is not None:
            on_step(t, 0, None, w)
    return _finish(w, state, epoch, lr, losses, plan.t_max)


def bcd_epoch(oracle, w, data, cfg, state, seed: int, on_step=None):
    """``ceil(n/B)`` iterations, each a full-data gradient applied to one random block."""
    w, epoch, lr = _begin(w, data, cfg, state, "BCD")
    m = w.shape[0]
    part = _partition(seed, m, cfg.M, epoch)
    t_max = num_batches(data.n, cfg.batch_size)
    choices = derive_stream(seed, f"block/epoch={epoch}").gen.integers(0, cfg.M, size=t_max)
    everything = np.arange(data.n)
    args = _kernel_args(state, cfg, lr)
    losses = []
    for t in range(t_max):
        j = int(choices[t])
        loss, g = _grad(oracle, w, everything, data, epoch, t, j)
        losses.append(loss)
        idx = block_coords(part, j)
        _kernels.block_step(w, g, idx, *args)
        if on_step is not None:
            on_step(t, j, idx, w)
    return _finish(w, state, epoch, lr, losses, t_max)


def sbc_epoch(oracle, w, data, cfg, state, seed: int, on_step=None):
    """One shuffled stream of batches; each batch updates one randomly chosen block."""
    w, epoch, lr = _begin(w, data, cfg, state, "SBC")
    m = w.shape[0]
    part = _partition(seed, m, cfg.M, epoch)
    plan = make_epoch_plan([_data_stream(seed, 0, epoch)], data.n, cfg.batch_size, 1)
    choices = derive_stream(seed, f"block/epoch={epoch}").gen.integers(0, cfg.M, size=plan.t_max)
    args = _kernel_args(state, cfg, lr)
    losses = []
    for t in range(plan.t_max):
        j = int(choices[t])
        loss, g = _grad(oracle, w, plan.batch(t, 0), data, epoch, t, j)
        losses.append(loss)
        idx = block_coords(part, j)
        _kernels.block_step(w, g, idx, *args)
        if on_step is not None:
            on_step(t, j, idx, w)
    return _finish(w, state, epoch, lr, losses, plan.t_max)


def rbc_epoch(oracle, w, data, cfg, state, seed: int, on_step=None):
    """One shuffled stream; each batch sweeps all M blocks, re-evaluating the gradient per block."""
    w, epoch, lr = _begin(w, data, cfg, state, "RBC")
    m = w.shape[0]
    part = _partition(seed, m, cfg.M, epoch)
    plan = make_epoch_plan([_data_stream(seed, 0, epoch)], data.n, cfg.batch_size, 1)
    args = _kernel_args(state, cfg, lr)
    losses = []
    for t in range(plan.t_max):
        batch = plan.batch(t, 0)
        for j in range(cfg.M):
            loss, g = _grad(oracle, w, batch, data, epoch, t, j)
            losses.append(loss)
            idx = block_coords(part, j)
            _kernels.block_step(w, g, idx, *args)
            if on_step is not None:
                on_step(t, j, idx, w)
    return _finish(w, state, epoch, lr, losses, plan.t_max * cfg.M)


def bcsc_epoch(oracle, w, data, cfg, state, seed: int, on_step=None):
    """Block-cyclic stochastic coordinate descent, one epoch.

    A fresh coordinate partition and M freshly shuffled data streams are
    drawn.  Sub-iteration ``(t, j)`` takes batch ``t`` of stream ``j``,
    evaluates the gradient at the current iterate, and updates block ``j``
    only.  Each block therefore sees every sample exactly once per epoch.
    """
    w, epoch, lr = _begin(w, data, cfg, state, "BCSC")
    m = w.shape[0]
    part = _partition(seed, m, cfg.M, epoch)
    plan = make_epoch_plan([_data_stream(seed, j, epoch) for j in range(cfg.M)],
                           data.n, cfg.batch_size, cfg.M)
    blocks = [block_coords(part, j) for j in range(cfg.M)]
    args = _kernel_args(state, cfg, lr)
    losses = []
    for t in range(plan.t_max):
        for j in range(cfg.M):
            loss, g = _grad(oracle, w, plan.batch(t, j), data, epoch, t, j)
            losses.append(loss)
            _kernels.block_step(w, g, blocks[j], *args)
            if on_step is not None:
                on_step(t, j, blocks[j], w)
    return _finish(w, state, epoch, lr, losses, plan.t_max * cfg.M)


_EPOCH_FNS = {
    "SGD": sgd_epoch,
    "BCD": bcd_epoch,
    "SBC": sbc_epoch,
    "RBC": rbc_epoch,
    "BCSC": bcsc_epoch,
}


def run_epoch(oracle, w, data, cfg, state, seed: int, on_step=None):
    return _EPOCH_FNS[cfg.method](oracle, w, data, cfg, state, seed, on_step=on_step)
