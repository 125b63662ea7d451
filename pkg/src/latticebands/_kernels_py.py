"""Pure numpy versions of the sweep kernels in ``_kernels.pyx``."""

from __future__ import annotations

import numpy as np

_CHUNK_ELEMENTS = 1 << 21


def separable_band_extrema(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-band min/max of sorted ``a[i, s] + b[k, t]`` over all grid cells ``(i, k)``."""
    a = np.ascontiguousarray(a, dtype=float)
    b = np.ascontiguousarray(b, dtype=float)
    n = a.shape[1] * b.shape[1]
    lo = np.full(n, np.inf)
    hi = np.full(n, -np.inf)
    rows = max(1, _CHUNK_ELEMENTS // max(1, b.shape[0] * n))
    for start in range(0, a.shape[0], rows):
        block = a[start:start + rows]
        sums = block[:, None, :, None] + b[None, :, None, :]
        sums = np.sort(sums.reshape(-1, n), axis=1)
        np.minimum(lo, sums.min(axis=0), out=lo)
        np.maximum(hi, sums.max(axis=0), out=hi)
    return lo, hi


def separable_count_grid(a: np.ndarray, b: np.ndarray, energy: float) -> tuple[np.ndarray, np.ndarray]:
    """Strict counts ``#{(s, t): a[i, s] + b[k, t] < energy}`` and distances to ``energy``."""
    a = np.ascontiguousarray(a, dtype=float)
    b = np.ascontiguousarray(b, dtype=float)
    na, nb = a.shape[0], b.shape[0]
    counts = np.empty((na, nb), dtype=np.int64)
    margins = np.empty((na, nb))
    n = a.shape[1] * b.shape[1]
    rows = max(1, _CHUNK_ELEMENTS // max(1, nb * n))
    for start in range(0, na, rows):
        block = a[start:start + rows]
        sums = block[:, None, :, None] + b[None, :, None, :]
        sums = sums.reshape(block.shape[0], nb, n)
        counts[start:start + rows] = np.count_nonzero(sums < energy, axis=2)
        margins[start:start + rows] = np.abs(sums - energy).min(axis=2) if n else np.inf
    return counts, margins
