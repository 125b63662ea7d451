"""Select the compiled sweep kernels when available, else the numpy fallback.

Set ``LATTICEBANDS_PURE_PYTHON=1`` to force the fallback.
"""

from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("LATTICEBANDS_PURE_PYTHON"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

separable_count_grid = _impl.separable_count_grid

# The compiled extrema kernel merges sorted runs per cell; numpy's vectorized sort
# wins once cells are large and need several merge passes (see benchmarks/).
_MERGE_CELL_LIMIT = 200
_MERGE_RUNS_LIMIT = 4


def separable_band_extrema(a, b):
    """Per-band min/max of the sorted separable sums over all grid cells."""
    p, q = a.shape[1], b.shape[1]
    if _impl is _kernels_py or (p * q > _MERGE_CELL_LIMIT and min(p, q) > _MERGE_RUNS_LIMIT):
        return _kernels_py.separable_band_extrema(a, b)
    return _impl.separable_band_extrema(a, b)


__all__ = ["BACKEND", "separable_band_extrema", "separable_count_grid"]
