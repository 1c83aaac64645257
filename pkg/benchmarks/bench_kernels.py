"""Benchmark the compiled embedding kernels against the numpy fallback.

Run: python benchmarks/bench_kernels.py

Both backends produce bit-identical results (asserted here); the point of
the extension is the gather/scatter loops, which np.add.at makes slow.
"""

import time

import numpy as np

from cptcoder.nn import _pool_np

try:
    from cptcoder.nn import _poolx
except ImportError:
    _poolx = None


def timeit(fn, *args, repeat=50):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    rng = np.random.default_rng(0)
    n_batch, n_slots, d = 256, 4, 8
    char_embed = rng.standard_normal((7, 37, d)).astype(np.float32)
    icd_idx = rng.integers(0, 37, size=(n_batch, n_slots, 7)).astype(np.int32)
    counts = rng.integers(1, n_slots + 1, size=n_batch).astype(np.int32)
    d_pooled = rng.standard_normal((n_batch, 7 * d)).astype(np.float32)
    rows = rng.standard_normal((n_batch, 16)).astype(np.float32)
    row_idx = rng.integers(0, 41, size=n_batch).astype(np.int32)

    cases = [
        ("pool_forward", "pool_chars_forward", (char_embed, icd_idx, counts)),
        ("pool_backward", "pool_chars_backward", (d_pooled, icd_idx, counts, 37)),
        ("scatter_rows", "scatter_rows", (rows, row_idx, 41)),
    ]

    print(f"batch={n_batch} slots={n_slots} d_c={d}  (best of 50 runs)")
    print(f"{'kernel':<14} {'numpy':>10} {'cython':>10} {'speedup':>8}")
    for label, name, args in cases:
        t_np = timeit(getattr(_pool_np, name), *args)
        if _poolx is None:
            print(f"{label:<14} {t_np * 1e6:>8.1f}us {'n/a':>10} {'-':>8}")
            continue
        t_cy = timeit(getattr(_poolx, name), *args)
        assert np.array_equal(getattr(_pool_np, name)(*args), getattr(_poolx, name)(*args))
        print(f"{label:<14} {t_np * 1e6:>8.1f}us {t_cy * 1e6:>8.1f}us {t_np / t_cy:>7.1f}x")

    if _poolx is None:
        print("\ncompiled extension not built; numpy fallback only")


if __name__ == "__main__":
    main()
