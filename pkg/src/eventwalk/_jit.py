"""Optional numba acceleration.

Kernels are plain Python functions wrapped with :func:`kernel`. When numba is
importable and ``EVENTWALK_NO_JIT`` is unset (or ``0``), they are compiled in
nopython mode with on-disk caching. Otherwise the Python body runs as is, which
is slow but handy for debugging and for the parity benchmark.
"""

from __future__ import annotations

import os

_flag = os.environ.get("EVENTWALK_NO_JIT", "").strip().lower()
DISABLED = _flag not in ("", "0", "false", "no")

try:
    if DISABLED:
        raise ImportError
    import numba as _numba
except ImportError:  # pragma: no cover - exercised only without numba
    _numba = None

JIT_ENABLED = _numba is not None


def kernel(fn):
    """Compile ``fn`` with numba when available, else return it unchanged."""
    if _numba is None:
        fn.py_func = fn
        return fn
    return _numba.njit(cache=True, nogil=True)(fn)


def inline_kernel(fn):
    """Like :func:`kernel` but inlined into callers at the numba IR level."""
    if _numba is None:
        fn.py_func = fn
        return fn
    return _numba.njit(cache=True, nogil=True, inline="always")(fn)


def python_impl(fn):
    """Return the uncompiled body of a kernel."""
    return getattr(fn, "py_func", fn)
