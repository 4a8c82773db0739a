"""Backend selection for the modular hot kernels.

The compiled extension is used when it imported and the modulus is below
2**32; otherwise calls route to the pure-Python twin. Set
``DPSECAGG_PURE=1`` to force the fallback for the whole process.
"""

import os
from contextlib import contextmanager

from . import _kernels_py

try:
    from . import _kernels as _ext
except ImportError:  # extension not built
    _ext = None

if os.environ.get("DPSECAGG_PURE"):
    _ext = None

EXT_MAX_Q = 1 << 32
BACKEND = "cython" if _ext is not None else "python"


_forced = None


def _impl(q):
    if _forced is not None:
        return _forced
    if _ext is not None and q < EXT_MAX_Q:
        return _ext
    return _kernels_py


def matmul(a, b, n, k, m, q):
    return _impl(q).matmul(a, b, n, k, m, q)


def rref(a, rows, cols, q):
    return _impl(q).rref(a, rows, cols, q)


def horner(coeffs, xs, q):
    return _impl(q).horner(coeffs, xs, q)


def dot(rows, flat, q):
    return _impl(q).dot(rows, flat, q)


def eval_queries(c, d, phis, theta, q):
    return _impl(q).eval_queries(c, d, phis, theta, q)


def backends():
    """Map of available backend name to kernel module, for tests and benchmarks."""
    found = {"python": _kernels_py}
    if _ext is not None:
        found["cython"] = _ext
    return found


@contextmanager
def use_backend(name):
    """Route every kernel call to backend ``name`` inside the block."""
    global _forced
    found = backends()
    if name not in found:
        raise ValueError(f"backend {name!r} not available; have {sorted(found)}")
    prev, _forced = _forced, found[name]
    try:
        yield found[name]
    finally:
        _forced = prev
