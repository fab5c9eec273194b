"""Kernel dispatch: the compiled extension when built, numpy otherwise.

Set ``LTLAB_PURE_PYTHON=1`` to force the numpy fallback.
"""

import os

from ltlab import _kernels_py

BACKEND = "python"
_impl = _kernels_py
if os.environ.get("LTLAB_PURE_PYTHON") != "1":
    try:
        from ltlab import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py

vec_gap_batch = _impl.vec_gap_batch
legendre_table = _impl.legendre_table
# real-exponent powers: numpy's vectorized pow beats the scalar libm loop
# (see benchmarks/bench_kernels.py), so this kernel stays on numpy
scalar_pow_gaps = _kernels_py.scalar_pow_gaps


def backends():
    """All importable backends, keyed by name."""
    found = {"python": _kernels_py}
    try:
        from ltlab import _kernels

        found["cython"] = _kernels
    except ImportError:
        pass
    return found
