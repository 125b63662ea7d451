"""Brillouin-zone sweeps: certified band enclosures, spectra, gaps and count quilts.

Every sweep samples the uniform ``resolution x resolution`` grid on
``[0, pi]^2`` with both corners included.

Certification: gauge-transforming the twist onto every bond shows that each
sorted fiber eigenvalue is ``2/p``-Lipschitz in ``theta`` and ``2/q``-Lipschitz
in ``phi`` whatever the potential.  Every zone point lies within ``h/2`` of a
grid node in each coordinate (``h = pi/(resolution-1)``), so true band edges
are within ``h (1/p + 1/q)`` of the sampled ones.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import EnergyInterval, Potential, SpectrumApproximation, interval_union
from .floquet import SEPARABLE_RESIDUAL, eigvalsh_stack, fiber_stack
from .laplace1d import eigenvalues_1d

log = logging.getLogger(__name__)

DEFAULT_RESOLUTION = 65


@dataclass(frozen=True)
class Band:
    """Sampled range ``enclosure`` of the ``index``-th band (1-based).

    The true band contains ``enclosure`` (up to ``residual_bound``) and lies
    inside ``enclosure`` widened by ``grid_error + residual_bound``.
    """

    index: int
    enclosure: EnergyInterval
    grid_error: float
    residual_bound: float = 0.0

    @property
    def lo(self) -> float:
        return self.enclosure.lo

    @property
    def hi(self) -> float:
        return self.enclosure.hi

    def to_dict(self) -> dict:
        return {"j": self.index, "lo": self.lo, "hi": self.hi, "grid_error": self.grid_error}


@dataclass(frozen=True, eq=False)
class Quilt:
    """Strict eigenvalue counts below ``energy`` on the phase grid.

    ``counts[i, k]`` belongs to ``theta = pi i/(resolution-1)`` and
    ``phi = pi k/(resolution-1)``.  Cells where ``energy`` was too close to the
    fiber spectrum hold ``-1`` and are listed in ``undefined_cells``.
    """

    energy: float
    resolution: int
    counts: np.ndarray
    undefined_cells: tuple[tuple[int, int], ...]

    def to_dict(self) -> dict:
        rows = [[None if c < 0 else int(c) for c in row] for row in self.counts]
        return {
            "E": self.energy,
            "theta_resolution": self.resolution,
            "phi_resolution": self.resolution,
            "counts": rows,
            "undefined_cells": [list(c) for c in self.undefined_cells],
        }


def phase_grid(resolution: int) -> np.ndarray:
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    return np.linspace(0.0, math.pi, resolution)


def grid_error(potential: Potential, resolution: int) -> float:
    h = math.pi / (resolution - 1)
    return h * (1.0 / potential.period.p + 1.0 / potential.period.q)


def _row_chunks(n: int, threads: int) -> list[slice]:
    parts = max(1, min(n, threads * 4 if threads > 1 else 1))
    edges = np.linspace(0, n, parts + 1).astype(int)
    return [slice(a, b) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def _run(fn, items, threads: int) -> list:
    if threads <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _dense_rows(potential: Potential, grid: np.ndarray, rows: slice):
    """Yield ``(row index, eigenvalues over phi, residual bound)`` for theta rows."""
    for i in range(rows.start, rows.stop):
        stack = fiber_stack(potential, np.full(grid.size, grid[i]), grid)
        vals, res = eigvalsh_stack(stack, phase=(grid[i], None))
        yield i, vals, res


def _dense_extrema(potential: Potential, grid: np.ndarray, rows: slice, stride: int | None):
    """Band extrema over ``rows`` of the grid; with ``stride`` also over the sub-grid of every
    ``stride``-th row and column (used for nested resolutions)."""
    n = potential.period.size
    lo, hi = np.full(n, np.inf), np.full(n, -np.inf)
    clo, chi = np.full(n, np.inf), np.full(n, -np.inf)
    worst = 0.0
    for i, vals, res in _dense_rows(potential, grid, rows):
        np.minimum(lo, vals.min(axis=0), out=lo)
        np.maximum(hi, vals.max(axis=0), out=hi)
        if stride and i % stride == 0:
            sub = vals[::stride]
            np.minimum(clo, sub.min(axis=0), out=clo)
            np.maximum(chi, sub.max(axis=0), out=chi)
        worst = max(worst, res)
    return lo, hi, clo, chi, worst


def _extrema(potential: Potential, resolution: int, threads: int, stride: int | None):
    grid = phase_grid(resolution)
    p, q = potential.period.p, potential.period.q
    chunks = _row_chunks(resolution, threads)
    if potential.is_zero:
        a = np.ascontiguousarray(eigenvalues_1d(p, grid))
        b = np.ascontiguousarray(eigenvalues_1d(q, grid))
        parts = _run(lambda s: kernels.separable_band_extrema(a[s], b), chunks, threads)
        lo = np.min([x[0] for x in parts], axis=0)
        hi = np.max([x[1] for x in parts], axis=0)
        coarse = None
        if stride:
            coarse = kernels.separable_band_extrema(
                np.ascontiguousarray(a[::stride]), np.ascontiguousarray(b[::stride]))
        return (lo, hi), coarse, SEPARABLE_RESIDUAL
    parts = _run(lambda s: _dense_extrema(potential, grid, s, stride), chunks, threads)
    lo = np.min([x[0] for x in parts], axis=0)
    hi = np.max([x[1] for x in parts], axis=0)
    coarse = None
    if stride:
        coarse = (np.min([x[2] for x in parts], axis=0), np.max([x[3] for x in parts], axis=0))
    return (lo, hi), coarse, max(x[4] for x in parts)


def band_extrema(potential: Potential, resolution: int, threads: int = 1) -> tuple[np.ndarray, np.ndarray, float]:
    """Per-band minimum and maximum over the phase grid plus the residual bound."""
    (lo, hi), _, residual = _extrema(potential, resolution, threads, None)
    return lo, hi, residual


def _bands(potential: Potential, resolution: int, lo, hi, residual: float) -> list[Band]:
    err = grid_error(potential, resolution)
    residual = float(residual)
    return [Band(j + 1, EnergyInterval(float(lo[j]), float(hi[j])), err, residual) for j in range(lo.size)]


def nested_spectra(potential: Potential, resolution: int = DEFAULT_RESOLUTION,
                   threads: int = 1) -> tuple[SpectrumApproximation, SpectrumApproximation]:
    """Spectra at ``resolution`` and at the refined ``2*resolution - 1`` from one fine sweep."""
    fine_res = 2 * resolution - 1
    (lo, hi), (clo, chi), residual = _extrema(potential, fine_res, threads, 2)
    coarse = spectrum_from_bands(_bands(potential, resolution, clo, chi, residual))
    fine = spectrum_from_bands(_bands(potential, fine_res, lo, hi, residual))
    return coarse, fine


def band_grid(potential: Potential, resolution: int) -> np.ndarray:
    """All sorted fiber eigenvalues on the grid, shape ``(res, res, pq)``; for small cases."""
    grid = phase_grid(resolution)
    out = np.empty((resolution, resolution, potential.period.size))
    for i, vals, _ in _dense_rows(potential, grid, slice(0, resolution)):
        out[i] = vals
    return out


def compute_bands(potential: Potential, resolution: int = DEFAULT_RESOLUTION, threads: int = 1) -> list[Band]:
    """Certified enclosures of all ``pq`` bands."""
    lo, hi, residual = band_extrema(potential, resolution, threads)
    log.debug("bands for %s at resolution %d: residual=%.3g", potential.period, resolution, residual)
    return _bands(potential, resolution, lo, hi, residual)


def spectrum_from_bands(bands: list[Band]) -> SpectrumApproximation:
    error_bound = float(bands[0].grid_error + max(b.residual_bound for b in bands))
    enclosures = [b.enclosure for b in bands]
    merged = interval_union(enclosures, 2.0 * error_bound)
    raw = interval_union(enclosures, 0.0)
    unresolved = [
        EnergyInterval(a.hi, b.lo) for a, b in zip(raw, raw[1:])
        if any(c.lo <= a.hi and b.lo <= c.hi for c in merged)
    ]
    return SpectrumApproximation(tuple(merged), error_bound, tuple(unresolved))


def spectrum(potential: Potential, resolution: int = DEFAULT_RESOLUTION, threads: int = 1) -> SpectrumApproximation:
    """The spectrum as a union of certified components."""
    return spectrum_from_bands(compute_bands(potential, resolution, threads))


def find_gaps(spec: SpectrumApproximation, potential: Potential) -> list[EnergyInterval]:
    """Open gaps between consecutive components, clipped to the a priori spectral range."""
    bound = 4.0 + potential.sup_norm
    gaps = []
    for a, b in zip(spec.intervals, spec.intervals[1:]):
        lo, hi = max(a.hi, -bound), min(b.lo, bound)
        if hi - lo > 2.0 * spec.error_bound:
            gaps.append(EnergyInterval(lo, hi))
    return gaps


def quilt(potential: Potential, energy: float, resolution: int, safety_margin: float | None = None,
          threads: int = 1) -> Quilt:
    """Grid of strict eigenvalue counts below ``energy``."""
    grid = phase_grid(resolution)
    p, q = potential.period.p, potential.period.q
    chunks = _row_chunks(resolution, threads)
    if potential.is_zero:
        a = np.ascontiguousarray(eigenvalues_1d(p, grid))
        b = np.ascontiguousarray(eigenvalues_1d(q, grid))
        parts = _run(lambda s: kernels.separable_count_grid(a[s], b, float(energy)), chunks, threads)
        counts = np.concatenate([c for c, _ in parts])
        margins = np.concatenate([m for _, m in parts])
        residual = SEPARABLE_RESIDUAL
    else:
        def work(s):
            c = np.empty((s.stop - s.start, resolution), dtype=np.int64)
            m = np.empty((s.stop - s.start, resolution))
            worst = 0.0
            for i, vals, res in _dense_rows(potential, grid, s):
                c[i - s.start] = np.count_nonzero(vals < energy, axis=1)
                m[i - s.start] = np.abs(vals - energy).min(axis=1)
                worst = max(worst, res)
            return c, m, worst

        parts = _run(work, chunks, threads)
        counts = np.concatenate([c for c, _, _ in parts])
        margins = np.concatenate([m for _, m, _ in parts])
        residual = max(w for _, _, w in parts)
    if safety_margin is None:
        safety_margin = 10.0 * residual
    bad = margins <= safety_margin
    counts = np.where(bad, -1, counts)
    undefined = tuple((int(i), int(k)) for i, k in zip(*np.nonzero(bad)))
    return Quilt(float(energy), resolution, counts, undefined)
