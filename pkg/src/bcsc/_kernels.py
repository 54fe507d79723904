"""Hot inner loops, compiled with numba when available.

Set ``BCSC_DISABLE_NUMBA=1`` to force the pure-numpy implementations (also
used automatically when numba is not installed).  Both paths perform the
same IEEE operations per coordinate in the same order and give bitwise
identical results.
"""

from __future__ import annotations

import os

import numpy as np

_DISABLE = os.environ.get("BCSC_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes", "on")

try:
    if _DISABLE:
        raise ImportError
    from numba import njit
    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

BACKEND = "numba" if HAVE_NUMBA else "numpy"


def fisher_yates_py(perm, draws):
    n = perm.shape[0]
    for k in range(draws.shape[0]):
        i = n - 1 - k
        j = draws[k]
        perm[i], perm[j] = perm[j], perm[i]


def block_step_py(w, g, idx, velocity, accumulator, lr, momentum, weight_decay, adagrad, eps):
    """In-place masked step on the coordinates ``idx``.

    ``ghat = g + weight_decay * w``; with AdaGrad ``acc += ghat**2`` and the
    scale is ``lr / sqrt(acc + eps)``; ``v = momentum * v + ghat``;
    ``w -= scale * v``.  Coordinates outside ``idx`` are not read or written.
    """
    wc = w[idx]
    ghat = g[idx] + weight_decay * wc
    if adagrad:
        acc = accumulator[idx] + ghat * ghat
        accumulator[idx] = acc
        scale = lr / np.sqrt(acc + eps)
    else:
        scale = lr
    v = momentum * velocity[idx] + ghat
    velocity[idx] = v
    w[idx] = wc - scale * v


def full_step_py(w, g, velocity, accumulator, lr, momentum, weight_decay, adagrad, eps):
    ghat = g + weight_decay * w
    if adagrad:
        accumulator += ghat * ghat
        scale = lr / np.sqrt(accumulator + eps)
    else:
        scale = lr
    velocity *= momentum
    velocity += ghat
    w -= scale * velocity


if HAVE_NUMBA:

    @njit(cache=True)
    def fisher_yates_nb(perm, draws):
        n = perm.shape[0]
        for k in range(draws.shape[0]):
            i = n - 1 - k
            j = draws[k]
            tmp = perm[i]
            perm[i] = perm[j]
            perm[j] = tmp

    @njit(cache=True)
    def block_step_nb(w, g, idx, velocity, accumulator, lr, momentum, weight_decay, adagrad, eps):
        for k in range(idx.shape[0]):
            c = idx[k]
            wc = w[c]
            ghat = g[c] + weight_decay * wc
            if adagrad:
                acc = accumulator[c] + ghat * ghat
                accumulator[c] = acc
                scale = lr / np.sqrt(acc + eps)
            else:
                scale = lr
            v = momentum * velocity[c] + ghat
            velocity[c] = v
            w[c] = wc - scale * v

    @njit(cache=True)
    def full_step_nb(w, g, velocity, accumulator, lr, momentum, weight_decay, adagrad, eps):
        for c in range(w.shape[0]):
            wc = w[c]
            ghat = g[c] + weight_decay * wc
            if adagrad:
                acc = accumulator[c] + ghat * ghat
                accumulator[c] = acc
                scale = lr / np.sqrt(acc + eps)
            else:
                scale = lr
            v = momentum * velocity[c] + ghat
            velocity[c] = v
            w[c] = wc - scale * v

    fisher_yates = fisher_yates_nb
    block_step = block_step_nb
    full_step = full_step_nb
else:
    fisher_yates = fisher_yates_py
    block_step = block_step_py
    full_step = full_step_py
