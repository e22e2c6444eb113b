"""Sampling kernels with an optional numba backend.

Set ``MEPS_DISABLE_JIT=1`` to force the pure-numpy path. Both paths draw
from the same single uniform variate and accumulate weights in the same
sequential order, so they agree up to the last ulp of ``exp``.
"""
import os

import numpy as np

JIT_DISABLED = os.environ.get("MEPS_DISABLE_JIT", "0").lower() in ("1", "true", "yes")

if not JIT_DISABLED:
    try:
        import numba as nb
    except ImportError:  # pragma: no cover
        JIT_DISABLED = True


def njit(*args, **kwargs):
    if not JIT_DISABLED:
        return nb.njit(*args, **kwargs)
    return lambda func: func


BACKEND = "numpy" if JIT_DISABLED else "numba"


@njit(cache=True, nogil=True)
def _softmax_pick_jit(h, idx, beta, u):
    n = idx.shape[0]
    m = beta * h[idx[0]]
    for k in range(1, n):
        x = beta * h[idx[k]]
        if x > m:
            m = x
    w = np.empty(n)
    total = 0.0
    for k in range(n):
        total += np.exp(beta * h[idx[k]] - m)
        w[k] = total
    target = u * total
    for k in range(n):
        if w[k] > target:
            return k
    return n - 1


@njit(cache=True, nogil=True)
def _standard_pick_jit(h, idx, u):
    n = idx.shape[0]
    w = np.empty(n)
    total = 0.0
    for k in range(n):
        total += h[idx[k]]
        w[k] = total
    target = u * total
    for k in range(n):
        if w[k] > target:
            return k
    return n - 1


@njit(cache=True, nogil=True)
def _argmax_tie_jit(row, u):
    best = row[0]
    for k in range(1, row.shape[0]):
        if row[k] > best:
            best = row[k]
    count = 0
    for k in range(row.shape[0]):
        if row[k] == best:
            count += 1
    pick = int(u * count)
    if pick >= count:
        pick = count - 1
    for k in range(row.shape[0]):
        if row[k] == best:
            if pick == 0:
                return k
            pick -= 1
    return -1


def _softmax_pick_np(h, idx, beta, u):
    x = beta * h[idx]
    c = np.cumsum(np.exp(x - x.max()))
    k = int(np.searchsorted(c, u * c[-1], side="right"))
    return min(k, len(idx) - 1)


def _standard_pick_np(h, idx, u):
    c = np.cumsum(h[idx])
    k = int(np.searchsorted(c, u * c[-1], side="right"))
    return min(k, len(idx) - 1)


def _argmax_tie_np(row, u):
    ties = np.flatnonzero(row == row.max())
    return int(ties[min(int(u * len(ties)), len(ties) - 1)])


if JIT_DISABLED:
    softmax_pick = _softmax_pick_np
    standard_pick = _standard_pick_np
    argmax_tie = _argmax_tie_np
else:
    softmax_pick = _softmax_pick_jit
    standard_pick = _standard_pick_jit
    argmax_tie = _argmax_tie_jit

# reference implementations, importable regardless of the active backend
numpy_kernels = {
    "softmax_pick": _softmax_pick_np,
    "standard_pick": _standard_pick_np,
    "argmax_tie": _argmax_tie_np,
}
