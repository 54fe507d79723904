import gzip

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import MNIST5K_IMAGES, MNIST5K_LABELS, full_mnist_dir

from bcsc.data import (
    Dataset,
    RawIdxTensor,
    corrupt_labels,
    load_idx,
    subset,
    synth_blobs,
    to_dataset,
    write_idx,
)
from bcsc.errors import IdxFormatError, IdxLengthError, ShapeError
from bcsc.models import LogisticOracle, evaluate
from bcsc.numerics import derive_stream
from bcsc.optim import OptimizerConfig, OptimizerState, Schedule, run_epoch

FIXTURE_BYTES = bytes([0, 0, 8, 3, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0, 2]) + bytes(range(1, 9))


def test_hand_built_fixture(tmp_path):
    path = tmp_path / "t.idx"
    path.write_bytes(FIXTURE_BYTES)
    t = load_idx(path)
    assert t.dims == (2, 2, 2)
    assert t.tobytes() == bytes(range(1, 9))
    out = tmp_path / "u.idx"
    write_idx(out, t.array)
    assert out.read_bytes() == FIXTURE_BYTES


def test_gzip_detected(tmp_path):
    path = tmp_path / "t.idx"  # no .gz suffix: detection is by content
    path.write_bytes(gzip.compress(FIXTURE_BYTES))
    assert load_idx(path).dims == (2, 2, 2)


@settings(max_examples=30, deadline=None)
@given(dims=st.lists(st.integers(1, 5), min_size=1, max_size=4), compress=st.booleans(), seed=st.integers(0, 99))
def test_idx_round_trip(tmp_path_factory, dims, compress, seed):
    arr = np.random.default_rng(seed).integers(0, 256, size=dims, dtype=np.uint8)
    path = tmp_path_factory.mktemp("idx") / "x.idx"
    write_idx(path, arr, compress=compress)
    assert np.array_equal(load_idx(path).array, arr)


@pytest.mark.parametrize("header", [b"\x00\x00\x09\x01", b"\x01\x00\x08\x01", b"\x00\x01\x08\x01"])
def test_bad_magic(tmp_path, header):
    path = tmp_path / "bad"
    path.write_bytes(header + b"\x00\x00\x00\x01\x05")
    with pytest.raises(IdxFormatError):
        load_idx(path)


@pytest.mark.parametrize("cut", [2, 10, len(FIXTURE_BYTES) - 1])
def test_truncated(tmp_path, cut):
    path = tmp_path / "short"
    path.write_bytes(FIXTURE_BYTES[:cut])
    with pytest.raises(IdxLengthError):
        load_idx(path)


def test_mnist_fixture_files():
    images, labels = load_idx(MNIST5K_IMAGES), load_idx(MNIST5K_LABELS)
    assert images.dims == (5000, 28, 28)
    assert labels.dims == (5000,)
    assert labels.array.max() <= 9
    assert np.bincount(labels.array).tolist() == [500] * 10
    assert MNIST5K_IMAGES.read_bytes()[:2] == b"\x1f\x8b"


@pytest.mark.skipif(full_mnist_dir() is None, reason="official MNIST files not in BCSC_DATA_DIR")
def test_full_mnist_dims():
    root = full_mnist_dir()
    pick = lambda stem: next(p for p in (root / stem, root / f"{stem}.gz") if p.is_file())
    images = load_idx(pick("train-images-idx3-ubyte"))
    labels = load_idx(pick("train-labels-idx1-ubyte"))
    assert images.dims == (60000, 28, 28)
    assert labels.dims == (60000,) and labels.array.max() <= 9
    assert to_dataset(images, labels).n == 60000


def test_to_dataset_scaling():
    img = np.zeros((2, 2, 2), dtype=np.uint8)
    img[1, 0, 1] = 255
    ds = to_dataset(RawIdxTensor(img), RawIdxTensor(np.array([3, 7], dtype=np.uint8)))
    assert ds.inputs.shape == (2, 4)
    assert not ds.inputs[0].any()
    assert ds.inputs[1, 1] == 1.0
    assert ds.labels.tolist() == [3, 7] and ds.K == 10


def test_to_dataset_mismatch():
    with pytest.raises(ShapeError):
        to_dataset(RawIdxTensor(np.zeros((3, 2, 2), np.uint8)), RawIdxTensor(np.zeros(2, np.uint8)))


def test_mnist_dataset(mnist5k):
    assert (mnist5k.n, mnist5k.d, mnist5k.K) == (5000, 784, 10)
    assert mnist5k.inputs.min() == 0.0 and mnist5k.inputs.max() == 1.0


def test_dataset_validation():
    with pytest.raises(ValueError):
        Dataset(np.zeros((2, 1)), np.array([0, 2]), 2)
    with pytest.raises(ShapeError):
        Dataset(np.zeros((2, 1)), np.array([0]), 2)
    with pytest.raises(ValueError):
        Dataset(np.array([[np.nan]]), np.array([0]), 1)


def test_blobs_balanced():
    ds = synth_blobs(derive_stream(0, "b"), 101, 4, 3, 5.0)
    counts = np.bincount(ds.labels, minlength=3)
    assert counts.max() - counts.min() <= 1


def test_blobs_mean_spacing():
    ds = synth_blobs(derive_stream(0, "b"), 30000, 3, 3, 10.0)
    mu = np.array([ds.inputs[ds.labels == k].mean(axis=0) for k in range(3)])
    dist = np.linalg.norm(mu[:, None] - mu[None], axis=2)[np.triu_indices(3, 1)]
    np.testing.assert_allclose(dist, 10.0, atol=0.1)


def _train_logistic(train, epochs):
    oracle = LogisticOracle(train.d, train.K)
    cfg = OptimizerConfig(method="SGD", batch_size=20, schedule=Schedule.constant(0.1, epochs))
    state = OptimizerState.zeros(oracle.param_count)
    w = oracle.init_params(derive_stream(0, "init"))
    for _ in range(epochs):
        w, _ = run_epoch(oracle, w, train, cfg, state, 0)
    return oracle, w


def test_blobs_separable():
    train = synth_blobs(derive_stream(1, "train"), 400, 2, 2, 100.0)
    oracle, w = _train_logistic(train, 5)
    assert evaluate(oracle, w, train)[1] >= 0.99


def test_blobs_indistinguishable():
    train = synth_blobs(derive_stream(1, "train"), 1000, 2, 2, 0.0)
    test = synth_blobs(derive_stream(1, "test"), 4000, 2, 2, 0.0)
    oracle, w = _train_logistic(train, 5)
    assert abs(evaluate(oracle, w, test)[1] - 0.5) <= 0.05


def test_corrupt_zero_rate():
    ds = synth_blobs(derive_stream(0, "b"), 50, 2, 3, 1.0)
    out, idx = corrupt_labels(derive_stream(0, "c"), ds, 0.0)
    assert out is ds and idx.size == 0


def test_corrupt_ten_percent():
    ds = synth_blobs(derive_stream(0, "b"), 2000, 2, 4, 1.0)
    out, idx = corrupt_labels(derive_stream(0, "c"), ds, 0.10)
    assert idx.size == 200 == np.unique(idx).size
    changed = np.flatnonzero(out.labels != ds.labels)
    assert np.array_equal(changed, idx)
    assert np.array_equal(out.inputs, ds.inputs)


def test_corrupt_all_binary():
    ds = synth_blobs(derive_stream(0, "b"), 30, 2, 2, 1.0)
    out, idx = corrupt_labels(derive_stream(0, "c"), ds, 1.0)
    assert idx.size == 30
    assert np.array_equal(out.labels, 1 - ds.labels)


def test_corrupt_wrong_labels_uniform():
    ds = Dataset(np.zeros((30000, 1)), np.zeros(30000, dtype=np.int64), 4)
    out, _ = corrupt_labels(derive_stream(3, "c"), ds, 1.0)
    freq = np.bincount(out.labels, minlength=4) / 30000
    assert freq[0] == 0
    np.testing.assert_allclose(freq[1:], 1 / 3, atol=0.01)


@settings(max_examples=40, deadline=None)
@given(rate=st.floats(0, 1), seed=st.integers(0, 1000), K=st.integers(2, 10))
def test_corrupt_never_keeps_label(rate, seed, K):
    ds = Dataset(np.zeros((97, 1)), np.arange(97) % K, K)
    out, idx = corrupt_labels(derive_stream(seed, "c"), ds, rate)
    assert idx.size == int(np.floor(rate * 97 + 1e-9))
    assert np.all(out.labels[idx] != ds.labels[idx])


def test_corrupt_deterministic():
    ds = synth_blobs(derive_stream(0, "b"), 100, 2, 3, 1.0)
    a = corrupt_labels(derive_stream(5, "c"), ds, 0.3)
    b = corrupt_labels(derive_stream(5, "c"), ds, 0.3)
    assert np.array_equal(a[0].labels, b[0].labels) and np.array_equal(a[1], b[1])


def test_subset_full_is_permutation():
    ds = synth_blobs(derive_stream(0, "b"), 40, 2, 2, 1.0)
    sub = subset(ds, derive_stream(0, "s"), 40)
    order = np.lexsort(sub.inputs.T)
    ref = np.lexsort(ds.inputs.T)
    assert np.array_equal(sub.inputs[order], ds.inputs[ref])


def test_subset_single_row():
    ds = synth_blobs(derive_stream(0, "b"), 40, 2, 2, 1.0)
    sub = subset(ds, derive_stream(0, "s"), 1)
    assert sub.n == 1 and 0 <= sub.labels[0] < 2


def test_subset_too_large():
    ds = synth_blobs(derive_stream(0, "b"), 10, 2, 2, 1.0)
    with pytest.raises(ShapeError):
        subset(ds, derive_stream(0, "s"), 11)


def test_subset_class_proportions(mnist5k):
    sub = subset(mnist5k, derive_stream(0, "data/train-subset"), 2000)
    full = np.bincount(mnist5k.labels, minlength=10) / mnist5k.n
    part = np.bincount(sub.labels, minlength=10) / sub.n
    assert np.all(np.abs(part - full) <= 0.03)
