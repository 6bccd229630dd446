"""Kernel dispatch: compiled extension when built, NumPy fallback otherwise.

Set ``DIWED_PURE_PYTHON=1`` to force the fallback.
"""
import os

from diwed import _pykernels

if os.environ.get("DIWED_PURE_PYTHON"):
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from diwed import _ckernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels
        BACKEND = "python"

count_minimum = _impl.count_minimum
dicke_moments = _impl.dicke_moments
