"""Kernel backend selection: compiled extension when built, numpy fallback otherwise.

Set CPTCODER_KERNELS=numpy to force the fallback (the cross-backend tests
and the benchmark use this). Both backends produce bit-identical results;
the extension is only faster.
"""

from __future__ import annotations

import os

from . import _pool_np

if os.environ.get("CPTCODER_KERNELS", "").lower() == "numpy":
    _impl = _pool_np
    BACKEND = "numpy"
else:
    try:
        from . import _poolx as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _pool_np
        BACKEND = "numpy"

pool_chars_forward = _impl.pool_chars_forward
pool_chars_backward = _impl.pool_chars_backward
scatter_rows = _impl.scatter_rows
