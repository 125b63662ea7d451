"""Closed-form spectral data of the one-dimensional twisted Laplacian.

``twisted_laplacian(r, theta)`` is the ``r x r`` Hermitian matrix of the
periodic 1D Laplacian with Floquet phase ``theta``; its eigenvalues are
``2cos((theta + 2 pi k) / r)`` for ``k = 0, ..., r-1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .exact import cos_sum_key


@dataclass(frozen=True)
class TwistedLaplacianSpectrum:
    r: int
    theta: float
    eigenvalues: np.ndarray


@dataclass(frozen=True)
class EigenvalueWithMultiplicity:
    value: float
    multiplicity: int


def _check_r(r: int) -> None:
    if int(r) != r or r < 1:
        raise ValueError(f"r must be a positive integer, got {r!r}")


def twisted_laplacian(r: int, theta: float) -> np.ndarray:
    """Dense matrix of the twisted Laplacian, including the ``r = 1, 2`` cases."""
    _check_r(r)
    if r == 1:
        return np.array([[2.0 * math.cos(theta)]], dtype=complex)
    w = complex(math.cos(theta), math.sin(theta))
    if r == 2:
        return np.array([[0.0, 1.0 + w.conjugate()], [1.0 + w, 0.0]], dtype=complex)
    mat = np.zeros((r, r), dtype=complex)
    idx = np.arange(r - 1)
    mat[idx, idx + 1] = 1.0
    mat[idx + 1, idx] = 1.0
    mat[0, r - 1] = w.conjugate()
    mat[r - 1, 0] = w
    return mat


def eigenvalues_1d(r: int, theta) -> np.ndarray:
    """Sorted eigenvalues of the twisted Laplacian.

    ``theta`` may be a scalar or an array; the result has a trailing axis of
    length ``r``.
    """
    _check_r(r)
    theta = np.asarray(theta, dtype=float)
    k = np.arange(r)
    vals = 2.0 * np.cos((theta[..., None] + 2.0 * np.pi * k) / r)
    return np.sort(vals, axis=-1, kind="stable")


def spectrum_1d(r: int, theta: float) -> TwistedLaplacianSpectrum:
    return TwistedLaplacianSpectrum(r, float(theta), eigenvalues_1d(r, theta))


_SPECIAL = {"0": Fraction(0), "pi/2": Fraction(1, 2), "pi": Fraction(1)}


def special_spectrum(r: int, phase) -> list[EigenvalueWithMultiplicity]:
    """Eigenvalues with exact multiplicities at the phases 0, pi/2 and pi.

    ``phase`` is one of ``"0"``, ``"pi/2"``, ``"pi"`` or the corresponding
    float.  Multiplicities come from integer angle bookkeeping, not from
    comparing floats.
    """
    _check_r(r)
    if isinstance(phase, str):
        frac = _SPECIAL[phase]
    else:
        frac = Fraction(float(phase) / math.pi).limit_denominator(2)
        if frac not in _SPECIAL.values() or abs(float(frac) * math.pi - phase) > 1e-12:
            raise ValueError(f"special phases are 0, pi/2 and pi, got {phase!r}")
    # eigen-angles pi * (num + 2 k den) / (r den)
    n = r * frac.denominator
    groups: dict[tuple[int, ...], list] = {}
    for k in range(r):
        m = frac.numerator + 2 * k * frac.denominator
        key = cos_sum_key((m,), n)
        if key in groups:
            groups[key][1] += 1
        else:
            groups[key] = [2.0 * math.cos(math.pi * m / n), 1]
    out = [EigenvalueWithMultiplicity(v, mult) for v, mult in groups.values()]
    return sorted(out, key=lambda e: e.value)


def discriminant(z, r: int):
    """Trace of the ``r``-th power of the transfer matrix ``[[z, -1], [1, 0]]``.

    Evaluated with the three-term recurrence ``t_{k+1} = z t_k - t_{k-1}``,
    ``t_0 = 2``, ``t_1 = z``. Works for real, complex and array arguments.
    """
    _check_r(r)
    prev, cur = 2.0 + 0 * z, z
    for _ in range(r - 1):
        prev, cur = cur, z * cur - prev
    return cur


def derivative_magnitude(lam, r: int):
    """``|d lambda / d theta|`` at the phases 0 and pi: ``sqrt(4 - lambda**2) / r``."""
    _check_r(r)
    lam = np.asarray(lam, dtype=float)
    if np.any(np.abs(lam) > 2.0 + 1e-12):
        raise ValueError("eigenvalues of the 1D Laplacian lie in [-2, 2]")
    out = np.sqrt(np.clip(4.0 - lam * lam, 0.0, None)) / r
    return float(out) if out.ndim == 0 else out


def derivative_signs(r: int) -> dict[int, int]:
    """Sign of the derivative of the ``j``-th sorted eigenvalue on ``(0, pi)``."""
    _check_r(r)
    return {j: -((-1) ** (r - j)) for j in range(1, r + 1)}
