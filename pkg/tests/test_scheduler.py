import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bcsc.errors import BatchError
from bcsc.numerics import derive_stream
from bcsc.scheduler import make_epoch_plan, next_batch


def plan(n, B, M, seed=0, epoch=1):
    return make_epoch_plan([derive_stream(seed, f"shuffle/j={j}/epoch={epoch}") for j in range(M)], n, B, M)


def test_remainder_batch():
    p = plan(5, 2, 1)
    assert p.t_max == 3
    assert [len(next_batch(p, t, 0)) for t in range(3)] == [2, 2, 1]


def test_full_batch_each_block():
    p = plan(4, 4, 3)
    assert p.t_max == 1
    for j in range(3):
        b = next_batch(p, 0, j)
        assert np.array_equal(b, p.streams[j])
        assert sorted(b.tolist()) == [0, 1, 2, 3]


def test_streams_differ_across_blocks():
    p = plan(50, 10, 2)
    assert not np.array_equal(p.streams[0], p.streams[1])


def test_consecutive_batches_disjoint():
    p = plan(37, 6, 2)
    for j in range(2):
        assert not set(next_batch(p, 0, j)) & set(next_batch(p, 1, j))


@pytest.mark.parametrize("n,B", [(5, 0), (5, 6)])
def test_bad_batch(n, B):
    with pytest.raises(BatchError):
        plan(n, B, 1)


def test_out_of_range():
    p = plan(5, 2, 2)
    with pytest.raises(IndexError):
        next_batch(p, 3, 0)
    with pytest.raises(IndexError):
        next_batch(p, 0, 2)


def test_deterministic():
    a, b = plan(30, 7, 3, seed=9), plan(30, 7, 3, seed=9)
    assert all(np.array_equal(x, y) for x, y in zip(a.streams, b.streams))


def test_fresh_shuffle_each_epoch():
    assert not np.array_equal(plan(40, 8, 1, epoch=1).streams[0], plan(40, 8, 1, epoch=2).streams[0])


@settings(max_examples=100, deadline=None)
@given(n=st.integers(1, 500), data=st.data())
def test_cyclic_coverage(n, data):
    B = data.draw(st.integers(1, n))
    M = data.draw(st.integers(1, 16))
    p = plan(n, B, M, seed=data.draw(st.integers(0, 2**32)))
    for j in range(M):
        got = np.concatenate([next_batch(p, t, j) for t in range(p.t_max)])
        assert np.array_equal(np.sort(got), np.arange(n))


def test_cross_block_batches_differ():
    same = 0
    for seed in range(200):
        p = plan(100, 10, 2, seed=seed)
        same += np.array_equal(next_batch(p, 0, 0), next_batch(p, 0, 1))
    assert same == 0
