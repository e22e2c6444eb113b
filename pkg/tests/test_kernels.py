import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from meps import _kernels


@settings(max_examples=200, deadline=None)
@given(
    st.lists(st.floats(0.01, 50), min_size=1, max_size=40),
    st.floats(0, 1, exclude_max=True),
    st.floats(0.1, 3),
)
def test_backends_agree(hs, u, beta):
    h = np.asarray(hs)
    idx = np.arange(len(h), dtype=np.int64)[::-1].copy()
    ref = _kernels.numpy_kernels
    assert _kernels.standard_pick(h, idx, u) == ref["standard_pick"](h, idx, u)
    # exp may differ in the last ulp between backends; only check away from bin edges
    k = _kernels.softmax_pick(h, idx, beta, u)
    k_ref = ref["softmax_pick"](h, idx, beta, u)
    if k != k_ref:
        x = beta * h[idx]
        c = np.cumsum(np.exp(x - x.max()))
        assert np.min(np.abs(c - u * c[-1])) < 1e-9 * c[-1]


@given(st.lists(st.integers(0, 3), min_size=1, max_size=10), st.floats(0, 1, exclude_max=True))
def test_argmax_tie_agrees(row, u):
    r = np.asarray(row, dtype=np.float64)
    k = _kernels.argmax_tie(r, u)
    assert k == _kernels.numpy_kernels["argmax_tie"](r, u)
    assert r[k] == r.max()


def test_standard_pick_is_inverse_cdf():
    h = np.array([1.0, 2.0, 1.0])
    idx = np.arange(3)
    assert [_kernels.standard_pick(h, idx, u) for u in (0.0, 0.24, 0.26, 0.74, 0.76, 0.999)] == [0, 0, 1, 1, 2, 2]


def test_backend_flag_is_reported():
    assert _kernels.BACKEND in ("numba", "numpy")


@pytest.mark.slow
def test_disable_jit_subprocess():
    import subprocess
    import sys

    out = subprocess.run(
        [sys.executable, "-c", "import meps; print(meps.BACKEND)"],
        env={"MEPS_DISABLE_JIT": "1", "PATH": "/usr/bin:/bin"},
        capture_output=True,
        text=True,
        check=True,
    )
    assert out.stdout.strip() == "numpy"
