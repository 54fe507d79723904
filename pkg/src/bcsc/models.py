"""Gradient oracles: softmax regression and a one-hidden-layer ReLU network.

An oracle maps a flat parameter vector and a batch of sample indices to the
batch-mean loss and its full gradient.  Parameter layouts (row-major):

* logistic: ``W (K x d)``, ``b (K)``
* mlp: ``W1 (hidden x d)``, ``b1 (hidden)``, ``W2 (K x hidden)``, ``b2 (K)``
"""

from __future__ import annotations

import numpy as np

from .numerics import RngStream

__all__ = [
    "GradOracle",
    "LogisticOracle",
    "MLPOracle",
    "CountingOracle",
    "logistic_oracle",
    "mlp_oracle",
    "make_oracle",
    "finite_diff_grad",
    "evaluate",
    "softmax_xent",
]

_EVAL_CHUNK = 4096


def softmax_xent(logits: np.ndarray, labels: np.ndarray):
    """Mean cross-entropy and its gradient w.r.t. the logits."""
    nb = logits.shape[0]
    shifted = logits - logits.max(axis=1, keepdims=True)
    expd = np.exp(shifted)
    sums = expd.sum(axis=1, keepdims=True)
    rows = np.arange(nb)
    loss = float(np.mean(np.log(sums[:, 0]) - shifted[rows, labels]))
    dlogits = expd / sums
    dlogits[rows, labels] -= 1.0
    dlogits /= nb
    return loss, dlogits


class GradOracle:
    """Interface every model exposes to the optimizers."""

    param_count: int

    def loss_and_grad(self, w, batch, data):
        raise NotImplementedError

    def loss(self, w, batch, data) -> float:
        return self.loss_and_grad(w, batch, data)[0]

    def logits(self, w, X):
        raise NotImplementedError

    def predict(self, w, X) -> np.ndarray:
        return np.argmax(self.logits(w, np.atleast_2d(X)), axis=1)

    def init_params(self, stream: RngStream) -> np.ndarray:
        raise NotImplementedError


class LogisticOracle(GradOracle):
    def __init__(self, d: int, K: int):
        if d < 1 or K < 1:
            raise ValueError(f"need d, K >= 1, got d={d}, K={K}")
        self.d = d
        self.K = K
        self.param_count = K * d + K

    def unpack(self, w):
        Kd = self.K * self.d
        return w[:Kd].reshape(self.K, self.d), w[Kd:]

    def logits(self, w, X):
        W, b = self.unpack(w)
        return X @ W.T + b

    def loss_and_grad(self, w, batch, data):
        X = data.inputs[batch]
        y = data.labels[batch]
        loss, dz = softmax_xent(self.logits(w, X), y)
        grad = np.empty(self.param_count)
        Kd = self.K * self.d
        grad[:Kd] = (dz.T @ X).ravel()
        grad[Kd:] = dz.sum(axis=0)
        return loss, grad

    def init_params(self, stream):
        w = np.zeros(self.param_count)
        r = 1.0 / np.sqrt(self.d)
        w[: self.K * self.d] = stream.gen.uniform(-r, r, self.K * self.d)
        return w


class MLPOracle(GradOracle):
    def __init__(self, d: int, hidden: int, K: int):
        if d < 1 or hidden < 1 or K < 1:
            raise ValueError(f"need d, hidden, K >= 1, got {d}, {hidden}, {K}")
        self.d = d
        self.hidden = hidden
        self.K = K
        self._sizes = (hidden * d, hidden, K * hidden, K)
        self._bounds = np.cumsum((0,) + self._sizes)
        self.param_count = int(self._bounds[-1])

    def unpack(self, w):
        o = self._bounds
        W1 = w[o[0]:o[1]].reshape(self.hidden, self.d)
        b1 = w[o[1]:o[2]]
        W2 = w[o[2]:o[3]].reshape(self.K, self.hidden)
        b2 = w[o[3]:o[4]]
        return W1, b1, W2, b2

    def pre_activations(self, w, X):
        W1, b1, _, _ = self.unpack(w)
        return X @ W1.T + b1

    def logits(self, w, X):
        _, _, W2, b2 = self.unpack(w)
        h = np.maximum(self.pre_activations(w, X), 0.0)
        return h @ W2.T + b2

    def loss_and_grad(self, w, batch, data):
        X = data.inputs[batch]
        y = data.labels[batch]
        W1, b1, W2, b2 = self.unpack(w)
        pre = X @ W1.T + b1
        active = pre > 0.0
        h = np.where(active, pre, 0.0)
        loss, dz = softmax_xent(h @ W2.T + b2, y)
        dh = dz @ W2
        dh[~active] = 0.0
        o = self._bounds
        grad = np.empty(self.param_count)
        grad[o[0]:o[1]] = (dh.T @ X).ravel()
        grad[o[1]:o[2]] = dh.sum(axis=0)
        grad[o[2]:o[3]] = (dz.T @ h).ravel()
        grad[o[3]:o[4]] = dz.sum(axis=0)
        return loss, grad

    def kink_distance(self, w, batch, data) -> float:
        """Smallest |pre-activation| over the batch; finite differences are unreliable near 0."""
        return float(np.min(np.abs(self.pre_activations(w, data.inputs[batch]))))

    def init_params(self, stream):
        w = np.zeros(self.param_count)
        o = self._bounds
        r1 = 1.0 / np.sqrt(self.d)
        r2 = 1.0 / np.sqrt(self.hidden)
        w[o[0]:o[1]] = stream.gen.uniform(-r1, r1, self._sizes[0])
        w[o[2]:o[3]] = stream.gen.uniform(-r2, r2, self._sizes[2])
        return w


class CountingOracle(GradOracle):
    """Wraps an oracle and counts ``loss_and_grad`` calls and samples seen."""

    def __init__(self, inner: GradOracle):
        self.inner = inner
        self.param_count = inner.param_count
        self.calls = 0
        self.samples = 0
        self.batch_sizes = []

    def loss_and_grad(self, w, batch, data):
        self.calls += 1
        self.samples += len(batch)
        self.batch_sizes.append(len(batch))
        return self.inner.loss_and_grad(w, batch, data)

    def logits(self, w, X):
        return self.inner.logits(w, X)

    def init_params(self, stream):
        return self.inner.init_params(stream)

    def reset(self):
        self.calls = 0
        self.samples = 0
        self.batch_sizes = []


def logistic_oracle(d: int, K: int) -> LogisticOracle:
    return LogisticOracle(d, K)


def mlp_oracle(d: int, hidden: int, K: int) -> MLPOracle:
    return MLPOracle(d, hidden, K)


def make_oracle(kind: str, d: int, K: int, hidden: int = 64) -> GradOracle:
    if kind == "logistic":
        return LogisticOracle(d, K)
    if kind == "mlp":
        return MLPOracle(d, hidden, K)
    raise ValueError(f"unknown model type {kind!r}")


def finite_diff_grad(oracle, w, batch, data, h: float = 1e-5, coords=None) -> np.ndarray:
    """Central-difference gradient, ``(f(w + h e_k) - f(w - h e_k)) / 2h``.

    ``coords`` restricts the probe to a subset of coordinates; the others are
    returned as NaN.
    """
    if h <= 0:
        raise ValueError("finite-difference step must be positive")
    w = np.array(w, dtype=np.float64)
    out = np.full(w.shape[0], np.nan) if coords is not None else np.empty(w.shape[0])
    ks = range(w.shape[0]) if coords is None else coords
    for k in ks:
        orig = w[k]
        w[k] = orig + h
        fp = oracle.loss(w, batch, data)
        w[k] = orig - h
        fm = oracle.loss(w, batch, data)
        w[k] = orig
        out[k] = (fp - fm) / (2.0 * h)
    return out


def evaluate(oracle, w, data):
    """Mean loss and accuracy over the whole dataset."""
    n = data.n
    total = 0.0
    correct = 0
    for start in range(0, n, _EVAL_CHUNK):
        idx = np.arange(start, min(start + _EVAL_CHUNK, n))
        logits = oracle.logits(w, data.inputs[idx])
        y = data.labels[idx]
        loss, _ = softmax_xent(logits, y)
        total += loss * idx.shape[0]
        correct += int(np.sum(np.argmax(logits, axis=1) == y))
    return total / n, correct / n
