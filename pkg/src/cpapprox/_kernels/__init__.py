"""Hot-kernel selection: compiled extension if built, numpy fallback otherwise.

``IMPL`` names the active lane ("cython" or "python"); both expose
``accumulate_packed`` and ``dense_convolve_1d`` with identical semantics.
"""

from . import _convpy

try:
    from . import _speedups as _ext

    IMPL = "cython"
    accumulate_packed = _ext.accumulate_packed
    dense_convolve_1d = _ext.dense_convolve_1d
except ImportError:  # extension not built
    _ext = None
    IMPL = "python"
    accumulate_packed = _convpy.accumulate_packed
    dense_convolve_1d = _convpy.dense_convolve_1d

__all__ = ["IMPL", "accumulate_packed", "dense_convolve_1d", "_convpy", "_ext"]
