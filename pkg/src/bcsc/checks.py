"""Small self-contained invariant checks used by the ``gradcheck`` and ``selftest`` commands."""

from __future__ import annotations

import numpy as np

from .data import Dataset
from .models import LogisticOracle, MLPOracle, finite_diff_grad
from .numerics import derive_stream
from .optim import STAIRCASE_SCHEDULE, OptimizerConfig, OptimizerState, Schedule, lr_at, run_epoch
from .partition import block_coords, block_restriction, make_partition
from .scheduler import make_epoch_plan

KINK_MARGIN = 1e-4


def relative_error(a, b) -> float:
    denom = max(np.linalg.norm(a), np.linalg.norm(b), 1e-300)
    return float(np.linalg.norm(a - b) / denom)


def _toy_dataset(seed: int, n: int = 40, d: int = 5, K: int = 3) -> Dataset:
    gen = derive_stream(seed, "checks/toy-data").gen
    return Dataset(gen.standard_normal((n, d)), gen.integers(0, K, n), K)


def gradient_check(kind: str, points: int = 20, seed: int = 0, h: float = 1e-5):
    """Max relative error between analytic and central-difference gradients.

    Points whose hidden pre-activations come within ``KINK_MARGIN`` of zero
    are redrawn.  Returns ``(max_error, errors)``.
    """
    data = _toy_dataset(seed)
    oracle = LogisticOracle(data.d, data.K) if kind == "logistic" else MLPOracle(data.d, 7, data.K)
    gen = derive_stream(seed, f"checks/gradcheck/{kind}").gen
    errors = []
    while len(errors) < points:
        w = gen.standard_normal(oracle.param_count)
        batch = gen.choice(data.n, size=int(gen.integers(1, 12)), replace=False)
        if isinstance(oracle, MLPOracle) and oracle.kink_distance(w, batch, data) < KINK_MARGIN:
            continue
        _, g = oracle.loss_and_grad(w, batch, data)
        errors.append(relative_error(g, finite_diff_grad(oracle, w, batch, data, h)))
    return max(errors), errors


def coverage_ok(seed: int, trials: int = 20) -> bool:
    gen = derive_stream(seed, "checks/coverage").gen
    for trial in range(trials):
        n = int(gen.integers(1, 200))
        B = int(gen.integers(1, n + 1))
        M = int(gen.integers(1, 9))
        plan = make_epoch_plan([derive_stream(seed, f"checks/cov/{trial}/{j}") for j in range(M)], n, B, M)
        for j in range(M):
            got = np.concatenate(list(plan.batches(j)))
            if not np.array_equal(np.sort(got), np.arange(n)):
                return False
    return True


def decomposition_ok(seed: int, trials: int = 20) -> bool:
    gen = derive_stream(seed, "checks/decomposition").gen
    for trial in range(trials):
        m = int(gen.integers(1, 300))
        M = int(gen.integers(1, m + 1))
        p = make_partition(derive_stream(seed, f"checks/dec/{trial}"), m, M)
        w = gen.standard_normal(m)
        total = np.zeros(m)
        for j in range(M):
            total += block_restriction(w, p, j)
        if not np.array_equal(total, w):
            return False
        if not np.array_equal(np.sort(np.concatenate([block_coords(p, j) for j in range(M)])), np.arange(m)):
            return False
    return True


def single_block_equivalence_ok(seed: int, epochs: int = 3) -> bool:
    data = _toy_dataset(seed, n=60)
    oracle = LogisticOracle(data.d, data.K)
    w0 = oracle.init_params(derive_stream(seed, "init"))
    sched = Schedule.constant(0.1, epochs)
    trajectories = {}
    for method in ("SGD", "SBC", "RBC", "BCSC"):
        cfg = OptimizerConfig(method=method, M=1, batch_size=8, schedule=sched)
        state = OptimizerState.zeros(oracle.param_count)
        w = w0
        traj = []
        for _ in range(epochs):
            w, _ = run_epoch(oracle, w, data, cfg, state, seed)
            traj.append(w.copy())
        trajectories[method] = traj
    ref = trajectories["SGD"]
    return all(np.array_equal(a, b) for tr in trajectories.values() for a, b in zip(tr, ref))


def schedule_ok() -> bool:
    expected = {1: 0.1, 100: 0.1, 101: 0.01, 150: 0.01, 151: 0.001, 200: 0.001}
    return all(lr_at(STAIRCASE_SCHEDULE, e) == v for e, v in expected.items())


def run_selftest(seed: int = 0, echo=print) -> bool:
    results = [
        ("cyclic coverage", coverage_ok(seed)),
        ("decomposition identity", decomposition_ok(seed)),
        ("logistic gradient", gradient_check("logistic", seed=seed)[0] <= 1e-5),
        ("mlp gradient", gradient_check("mlp", seed=seed)[0] <= 1e-5),
        ("M=1 equivalence with SGD", single_block_equivalence_ok(seed)),
        ("staircase schedule", schedule_ok()),
    ]
    for name, ok in results:
        echo(f"{'PASS' if ok else 'FAIL'}  {name}")
    return all(ok for _, ok in results)
