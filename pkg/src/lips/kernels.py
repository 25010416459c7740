"""Backend selection for the hot kernels.

The compiled extension is used when it imports; set ``LIPS_PURE_PYTHON=1``
to force the NumPy implementation.  ``LIPS_THREADS`` sets the worker count
for batched cell counting (the compiled kernel releases the GIL).
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import _pykernels

_force_py = os.environ.get("LIPS_PURE_PYTHON", "").strip().lower() in ("1", "true", "yes")

if _force_py:
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels
        BACKEND = "python"

FIELDS = ("nroots", "cycles", "fixed", "escape", "status")


def thread_count() -> int:
    try:
        n = int(os.environ.get("LIPS_THREADS", "0"))
    except ValueError:
        n = 0
    return n if n > 0 else (os.cpu_count() or 1)


def residual(fs, p, q, y, impl=None):
    return (impl or _impl).residual(fs, p, q, y)


def count_cells(fs, ps, qs, grid_n: int = 4001, impl=None, threads: int | None = None,
                chunk: int = 256):
    """Batched root counting; chunks run concurrently, output order is fixed."""
    impl = impl or _impl
    ps = np.ascontiguousarray(ps, dtype=float).ravel()
    qs = np.ascontiguousarray(qs, dtype=float).ravel()
    threads = thread_count() if threads is None else threads
    if threads <= 1 or ps.size <= chunk:
        return impl.count_cells(fs, ps, qs, grid_n)
    starts = range(0, ps.size, chunk)
    with ThreadPoolExecutor(max_workers=threads) as ex:
        parts = list(ex.map(lambda s: impl.count_cells(fs, ps[s:s + chunk], qs[s:s + chunk], grid_n),
                            starts))
    return {k: np.concatenate([part[k] for part in parts]) for k in FIELDS}


def implementations() -> dict:
    """Every importable kernel implementation by name (the NumPy one always)."""
    out = {"python": _pykernels}
    try:
        from . import _ckernels
        out["cython"] = _ckernels
    except ImportError:
        pass
    return out
