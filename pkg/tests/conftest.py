import os
from pathlib import Path

import numpy as np
import pytest

from bcsc.data import Dataset, load_idx, to_dataset
from bcsc.models import GradOracle

DATA = Path(__file__).parent / "data"
MNIST5K_IMAGES = DATA / "mnist5k-images-idx3-ubyte.gz"
MNIST5K_LABELS = DATA / "mnist5k-labels-idx1-ubyte.gz"


class QuadraticOracle(GradOracle):
    """f_i(w) = 0.5 * ||w - c_i||^2 with the centres c_i stored as dataset inputs."""

    def __init__(self, m):
        self.param_count = m

    def loss_and_grad(self, w, batch, data):
        diff = w[None, :] - data.inputs[batch]
        return 0.5 * float(np.mean(np.sum(diff * diff, axis=1))), diff.mean(axis=0)

    def init_params(self, stream):
        return np.zeros(self.param_count)


def centres(c):
    c = np.atleast_2d(np.asarray(c, dtype=np.float64))
    return Dataset(c, np.zeros(c.shape[0], dtype=np.int64), 1)


@pytest.fixture
def quad():
    return QuadraticOracle


@pytest.fixture(scope="session")
def mnist5k():
    return to_dataset(load_idx(MNIST5K_IMAGES), load_idx(MNIST5K_LABELS))


@pytest.fixture
def toy():
    gen = np.random.default_rng(7)
    return Dataset(gen.standard_normal((60, 4)), gen.integers(0, 3, 60), 3)


def full_mnist_dir():
    root = os.environ.get("BCSC_DATA_DIR")
    if not root:
        return None
    for name in ("train-images-idx3-ubyte", "train-images-idx3-ubyte.gz"):
        if (Path(root) / name).is_file():
            return Path(root)
    return None


_CRITERIA = []


@pytest.fixture
def criterion(request):
    """Record one acceptance criterion: ``criterion(number, ok, detail)``."""
    import time

    start = time.perf_counter()
    record = {}

    def report(number, ok, detail=""):
        record.update(number=number, ok=bool(ok), detail=detail)

    yield report
    if record:
        record["seconds"] = time.perf_counter() - start
        _CRITERIA.append(record)
        line = f"{'PASS' if record['ok'] else 'FAIL'} criterion {record['number']}: {record['detail']}"
        print(f"\n{line} ({record['seconds']:.1f}s)")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for rec in sorted(_CRITERIA, key=lambda r: r["number"]):
        terminalreporter.write_line(
            f"{'PASS' if rec['ok'] else 'FAIL'}  {rec['number']:>2}  {rec['detail']}  [{rec['seconds']:.1f}s]")
