"""Numerical core: compiled kernels with a pure-numpy fallback.

The hot inner loops (dense simplex pivoting, ray/triangle intersection)
live in the ``_kernels`` Cython extension.  When the extension is not
built, or when ``RISPLAN_FORCE_PYTHON=1`` is set, the numpy fallback in
``_kernels_py`` is used instead.  Both implement identical arithmetic;
``benchmarks/bench_kernels.py`` compares their throughput.
"""

import os

from . import _kernels_py

if os.environ.get("RISPLAN_FORCE_PYTHON") == "1":
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

NB_LO = _kernels_py.NB_LO
NB_HI = _kernels_py.NB_HI
BASIC = _kernels_py.BASIC
NB_FREE = _kernels_py.NB_FREE
STATUS_OPTIMAL = _kernels_py.STATUS_OPTIMAL
STATUS_UNBOUNDED = _kernels_py.STATUS_UNBOUNDED
STATUS_MAXITER = _kernels_py.STATUS_MAXITER

simplex_iterate = _impl.simplex_iterate
tri_intersect_pairs = _impl.tri_intersect_pairs
segments_blocked = _impl.segments_blocked
