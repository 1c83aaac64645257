"""Cross-backend equivalence: the compiled kernels must match the numpy
fallback bit for bit, in both float32 and float64."""

import numpy as np
import pytest

from cptcoder.nn import _pool_np

try:
    from cptcoder.nn import _poolx
except ImportError:
    _poolx = None

needs_ext = pytest.mark.skipif(_poolx is None, reason="compiled extension not built")


def _random_case(rng, dtype):
    d = int(rng.integers(2, 9))
    n = int(rng.integers(1, 65))
    n_slots = int(rng.integers(1, 13))
    char_embed = rng.standard_normal((7, 37, d)).astype(dtype)
    icd_idx = rng.integers(0, 37, size=(n, n_slots, 7)).astype(np.int32)
    counts = rng.integers(1, n_slots + 1, size=n).astype(np.int32)
    d_pooled = rng.standard_normal((n, 7 * d)).astype(dtype)
    return char_embed, icd_idx, counts, d_pooled


@needs_ext
@pytest.mark.parametrize("dtype", [np.float32, np.float64])
def test_pool_forward_bit_equal(dtype):
    rng = np.random.default_rng(1)
    for _ in range(20):
        ce, idx, counts, _ = _random_case(rng, dtype)
        a = _pool_np.pool_chars_forward(ce, idx, counts)
        b = _poolx.pool_chars_forward(ce, idx, counts)
        assert a.dtype == b.dtype == dtype
        assert np.array_equal(a, b)


@needs_ext
@pytest.mark.parametrize("dtype", [np.float32, np.float64])
def test_pool_backward_bit_equal(dtype):
    rng = np.random.default_rng(2)
    for _ in range(20):
        _, idx, counts, d_pooled = _random_case(rng, dtype)
        a = _pool_np.pool_chars_backward(d_pooled, idx, counts, 37)
        b = _poolx.pool_chars_backward(d_pooled, idx, counts, 37)
        assert np.array_equal(a, b)


@needs_ext
@pytest.mark.parametrize("dtype", [np.float32, np.float64])
def test_scatter_rows_bit_equal(dtype):
    rng = np.random.default_rng(3)
    for _ in range(20):
        n = int(rng.integers(1, 200))
        d = int(rng.integers(1, 20))
        rows = rng.standard_normal((n, d)).astype(dtype)
        idx = rng.integers(0, 11, size=n).astype(np.int32)
        a = _pool_np.scatter_rows(rows, idx, 11)
        b = _poolx.scatter_rows(rows, idx, 11)
        assert np.array_equal(a, b)


def test_pool_forward_matches_naive_reference():
    rng = np.random.default_rng(4)
    ce, idx, counts, _ = _random_case(rng, np.float64)
    d = ce.shape[2]
    out = _pool_np.pool_chars_forward(ce, idx, counts)
    for b in range(idx.shape[0]):
        expected = np.zeros(7 * d)
        for s in range(counts[b]):
            expected += np.concatenate([ce[p, idx[b, s, p]] for p in range(7)])
        np.testing.assert_allclose(out[b], expected, rtol=1e-12)


def test_pool_backward_is_adjoint_of_forward():
    # <pool(E), G> == <E, scatter(G)> for random E, G
    rng = np.random.default_rng(5)
    ce, idx, counts, d_pooled = _random_case(rng, np.float64)
    pooled = _pool_np.pool_chars_forward(ce, idx, counts)
    grad = _pool_np.pool_chars_backward(d_pooled, idx, counts, 37)
    lhs = float((pooled * d_pooled).sum())
    rhs = float((ce * grad).sum())
    assert lhs == pytest.approx(rhs, rel=1e-10)


def test_backend_selection_env(monkeypatch):
    import importlib

    import cptcoder.nn.kernels as kernels

    monkeypatch.setenv("CPTCODER_KERNELS", "numpy")
    reloaded = importlib.reload(kernels)
    assert reloaded.BACKEND == "numpy"
    monkeypatch.delenv("CPTCODER_KERNELS")
    restored = importlib.reload(kernels)
    assert restored.BACKEND in ("cython", "numpy")
