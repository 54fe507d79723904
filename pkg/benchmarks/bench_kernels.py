"""Time the numba kernels against their numpy twins.

    python benchmarks/bench_kernels.py [--m 50890] [--M 8] [--repeats 200]

Also times one BCSC epoch of the MNIST MLP under each backend (run in a
subprocess so the ``BCSC_DISABLE_NUMBA`` flag takes effect at import).
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from bcsc import _kernels

EPOCH_SNIPPET = """
import time
from pathlib import Path
import numpy as np
from bcsc import _kernels
from bcsc.data import load_idx, to_dataset, subset
from bcsc.models import MLPOracle
from bcsc.numerics import derive_stream
from bcsc.optim import OptimizerConfig, OptimizerState, Schedule, run_epoch
root = Path({root!r})
full = to_dataset(load_idx(root / "mnist5k-images-idx3-ubyte.gz"), load_idx(root / "mnist5k-labels-idx1-ubyte.gz"))
data = subset(full, derive_stream(0, "bench"), 2000)
oracle = MLPOracle(784, 64, 10)
cfg = OptimizerConfig(method="BCSC", M={M}, batch_size=128, schedule=Schedule.constant(0.1, 3), adagrad=True)
state = OptimizerState.zeros(oracle.param_count)
w = oracle.init_params(derive_stream(0, "init"))
w, _ = run_epoch(oracle, w, data, cfg, state, 0)  # warm-up / compile
t = time.perf_counter()
for _ in range(2):
    w, _ = run_epoch(oracle, w, data, cfg, state, 0)
print(_kernels.BACKEND, (time.perf_counter() - t) / 2)
"""


def timeit(fn, repeats):
    fn()
    start = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - start) / repeats


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--m", type=int, default=50890, help="parameter count (default: MNIST MLP-64)")
    ap.add_argument("--M", type=int, default=8)
    ap.add_argument("--n", type=int, default=60000, help="shuffle length")
    ap.add_argument("--repeats", type=int, default=200)
    args = ap.parse_args()
    if not _kernels.HAVE_NUMBA:
        sys.exit("numba backend unavailable (not installed or BCSC_DISABLE_NUMBA set)")

    gen = np.random.default_rng(0)
    m = args.m
    idx = gen.permutation(m)[: m // args.M]
    w, g = gen.standard_normal(m), gen.standard_normal(m)
    v, acc = np.zeros(m), np.zeros(m)

    print(f"block step: m={m}, block of {idx.size} coordinates")
    for adagrad in (False, True):
        for name, fn in (("numba", _kernels.block_step_nb), ("numpy", _kernels.block_step_py)):
            t = timeit(lambda: fn(w, g, idx, v, acc, 1e-3, 0.9, 5e-4, adagrad, 1e-8), args.repeats)
            print(f"  adagrad={adagrad!s:<5} {name:<6} {t * 1e6:9.1f} us")

    print(f"full step: m={m}")
    for name, fn in (("numba", _kernels.full_step_nb), ("numpy", _kernels.full_step_py)):
        t = timeit(lambda: fn(w, g, v, acc, 1e-3, 0.9, 5e-4, True, 1e-8), args.repeats)
        print(f"  {name:<6} {t * 1e6:9.1f} us")

    n = args.n
    draws = gen.integers(0, np.arange(n, 1, -1))
    print(f"fisher-yates swaps: n={n}")
    for name, fn in (("numba", _kernels.fisher_yates_nb), ("numpy", _kernels.fisher_yates_py)):
        t = timeit(lambda: fn(np.arange(n), draws), max(args.repeats // 20, 3))
        print(f"  {name:<6} {t * 1e3:9.2f} ms")

    root = os.path.join(os.path.dirname(__file__), os.pardir, "tests", "data")
    print(f"BCSC epoch, MLP-64 on 2000 MNIST samples, M={args.M}, AdaGrad on")
    for flag in ("0", "1"):
        env = dict(os.environ, BCSC_DISABLE_NUMBA=flag)
        res = subprocess.run([sys.executable, "-c", EPOCH_SNIPPET.format(root=os.path.abspath(root), M=args.M)],
                             env=env, capture_output=True, text=True, check=True)
        backend, secs = res.stdout.split()
        print(f"  {backend:<6} {float(secs):9.3f} s/epoch")


if __name__ == "__main__":
    main()
