"""Kernel backend selection for the sparse solver.

The compiled Cython kernel is preferred when it built; otherwise the
pure-numpy twin takes over.  CCAKIT_PURE_PYTHON=1 forces the fallback
(useful for parity testing and benchmarking).
"""

import os

from . import _pmd_numpy

if os.environ.get("CCAKIT_PURE_PYTHON") == "1":
    _impl = _pmd_numpy
else:
    try:
        from . import _pmd_cy as _impl
    except ImportError:
        _impl = _pmd_numpy

BACKEND_NAME = _impl.BACKEND_NAME
soft_threshold = _impl.soft_threshold
l1_unit_project = _impl.l1_unit_project
rank_one_pmd = _impl.rank_one_pmd


def kernel_backend() -> str:
    """Name of the kernel implementation in use ("cython" or "numpy")."""
    return BACKEND_NAME
