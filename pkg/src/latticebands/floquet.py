"""Fiber operators of a periodic Schrödinger operator on the square lattice.

The fiber at phase ``(theta, phi)`` acts on one period cell with Floquet
boundary conditions and is assembled as a Kronecker sum

    H = L_p(theta) (x) I_q + I_p (x) L_q(phi) + diag(vec V)

where ``L_r`` is the twisted 1D Laplacian and ``vec`` flattens ``V[k, l]`` to
index ``k*q + l`` (row-major).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .core import BlochPhase, Period, Potential
from .exact import as_pi_fraction, exact_separable_multiplicities
from .laplace1d import eigenvalues_1d, twisted_laplacian

_EPS = np.finfo(float).eps
# rounding allowance of the closed-form separable eigenvalues (|value| <= 4)
SEPARABLE_RESIDUAL = 64 * _EPS * 4.0


class NotHermitianError(ValueError):
    pass


class EigensolverError(RuntimeError):
    """The dense eigensolver did not converge or missed its residual target."""

    def __init__(self, message: str, phase=None):
        super().__init__(message if phase is None else f"{message} at phase {phase}")
        self.phase = phase


@dataclass(frozen=True, eq=False)
class FiberMatrix:
    period: Period
    phase: BlochPhase
    entries: np.ndarray

    @property
    def trace(self) -> float:
        return float(np.trace(self.entries).real)


@dataclass(frozen=True, eq=False)
class FiberSpectrum:
    period: Period
    phase: BlochPhase
    eigenvalues: np.ndarray
    residual_bound: float


@dataclass(frozen=True)
class CountResult:
    """Strict eigenvalue count below an energy.

    ``count`` is ``None`` when the energy sits within the safety margin of the
    fiber spectrum; ``margin`` is the distance from the energy to the nearest
    eigenvalue either way.
    """

    count: int | None
    margin: float

    @property
    def too_close(self) -> bool:
        return self.count is None


def _mirror_upper(mat: np.ndarray) -> np.ndarray:
    """Make a matrix (or stack) exactly Hermitian from its upper triangle."""
    upper = np.triu(mat)
    lower = np.conj(np.swapaxes(np.triu(mat, 1), -1, -2))
    out = upper + lower
    diag = np.einsum("...ii->...i", out)
    diag.imag = 0.0
    return out


def fiber_matrix(potential: Potential, theta: float, phi: float) -> np.ndarray:
    """Fiber matrix for arbitrary real phases (no folding into ``[0, pi]``)."""
    p, q = potential.period.p, potential.period.q
    mat = np.kron(twisted_laplacian(p, theta), np.eye(q)) + np.kron(np.eye(p), twisted_laplacian(q, phi))
    mat[np.diag_indices(p * q)] += potential.values.ravel()
    return _mirror_upper(mat)


def build_fiber(potential: Potential, phase: BlochPhase) -> FiberMatrix:
    return FiberMatrix(potential.period, phase, fiber_matrix(potential, phase.theta, phase.phi))


def fiber_stack(potential: Potential, thetas, phis) -> np.ndarray:
    """Fiber matrices for paired phase arrays, shape ``(len(thetas), pq, pq)``."""
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    phis = np.atleast_1d(np.asarray(phis, dtype=float))
    p, q = potential.period.p, potential.period.q
    n = p * q
    stack = np.zeros((thetas.size, n, n), dtype=complex)
    base = fiber_matrix(potential, 0.0, 0.0)
    # phase-independent part: interior hops and potential
    stack[:] = base
    _set_twists(stack, p, q, thetas, axis="theta")
    _set_twists(stack, p, q, phis, axis="phi")
    return stack


def _set_twists(stack: np.ndarray, p: int, q: int, phases: np.ndarray, axis: str) -> None:
    """Overwrite the phase-dependent entries of ``stack`` in place."""
    r, other = (p, q) if axis == "theta" else (q, p)
    w = np.exp(1j * phases)

    def site(a, b):
        return a * q + b if axis == "theta" else b * q + a

    for o in range(other):
        if r == 1:
            i = site(0, o)
            stack[:, i, i] += 2.0 * np.cos(phases) - 2.0
        elif r == 2:
            i, j = site(0, o), site(1, o)
            stack[:, i, j] = 1.0 + np.conj(w)
            stack[:, j, i] = 1.0 + w
        else:
            i, j = site(0, o), site(r - 1, o)
            stack[:, i, j] = np.conj(w)
            stack[:, j, i] = w


def _check_hermitian(mat: np.ndarray, atol: float = 1e-12) -> None:
    if mat.shape[-1] != mat.shape[-2]:
        raise NotHermitianError("matrix is not square")
    dev = np.max(np.abs(mat - np.conj(np.swapaxes(mat, -1, -2)))) if mat.size else 0.0
    if dev > atol:
        raise NotHermitianError(f"matrix deviates from Hermitian by {dev:.3g}")


def hermitian_eigenvalues(mat, tolerance: float = 1e-9) -> tuple[np.ndarray, float]:
    """All eigenvalues of a Hermitian matrix with an a posteriori residual bound.

    Returns ``(eigenvalues, residual_bound)``: ascending eigenvalues with
    multiplicity and the largest residual ``||M v - lambda v||`` over the
    computed unit eigenvectors, so each returned value lies within
    ``residual_bound`` of the true spectrum.

    Raises
    ------
    NotHermitianError
        If ``mat`` is not Hermitian to within ``1e-12`` entrywise.
    EigensolverError
        If the matrix has non-finite entries, LAPACK fails to converge or the residual exceeds
        ``tolerance * max(1, ||M||)``.
    """
    mat = np.asarray(mat, dtype=complex)
    _check_hermitian(mat)
    if not np.all(np.isfinite(mat)):
        raise EigensolverError("matrix has non-finite entries")
    try:
        vals, vecs = np.linalg.eigh(mat)
    except np.linalg.LinAlgError as exc:
        raise EigensolverError(f"eigensolver failed to converge: {exc}") from exc
    if vals.size == 0:
        return vals, 0.0
    vecs = vecs / np.linalg.norm(vecs, axis=0)
    residual = float(np.max(np.linalg.norm(mat @ vecs - vecs * vals, axis=0)))
    scale = max(1.0, float(np.linalg.norm(mat, 2)))
    if residual > tolerance * scale:
        raise EigensolverError(f"residual {residual:.3g} exceeds tolerance {tolerance:g}")
    return vals, residual


def eigvalsh_stack(stack: np.ndarray, phase=None) -> tuple[np.ndarray, float]:
    """Eigenvalues of a stack of Hermitian matrices with an a priori error bound.

    The bound ``8 n eps max ||M||_F`` follows from backward stability of the
    Householder-based LAPACK solver plus Weyl's inequality; no eigenvectors are
    formed, which keeps Brillouin-zone sweeps cheap.
    """
    try:
        vals = np.linalg.eigvalsh(stack)
    except np.linalg.LinAlgError as exc:
        raise EigensolverError(f"eigensolver failed to converge: {exc}", phase) from exc
    n = stack.shape[-1]
    frob = float(np.max(np.linalg.norm(stack, axis=(-2, -1)))) if stack.size else 0.0
    return vals, 8.0 * n * _EPS * frob


def separable_eigenvalues(p: int, q: int, phase: BlochPhase) -> np.ndarray:
    """Sorted sums ``lambda^p_k(theta) + lambda^q_l(phi)`` over all index pairs."""
    return separable_eigenvalues_raw(p, q, phase.theta, phase.phi)


def separable_eigenvalues_raw(p: int, q: int, theta: float, phi: float) -> np.ndarray:
    a = eigenvalues_1d(p, theta)
    b = eigenvalues_1d(q, phi)
    return np.sort((a[:, None] + b[None, :]).ravel())


def fiber_eigenvalues(potential: Potential, phase: BlochPhase, tolerance: float = 1e-9) -> FiberSpectrum:
    """Fiber spectrum; the zero potential takes the closed-form separable path."""
    period = potential.period
    if potential.is_zero:
        vals = separable_eigenvalues(period.p, period.q, phase)
        return FiberSpectrum(period, phase, vals, SEPARABLE_RESIDUAL)
    vals, res = hermitian_eigenvalues(build_fiber(potential, phase).entries, tolerance)
    return FiberSpectrum(period, phase, vals, res)


def count_from_eigenvalues(vals: np.ndarray, energy: float, safety_margin: float) -> CountResult:
    if vals.size == 0:
        return CountResult(0, math.inf)
    margin = float(np.min(np.abs(vals - energy)))
    if margin <= safety_margin:
        return CountResult(None, margin)
    return CountResult(int(np.count_nonzero(vals < energy)), margin)


def count_below(potential: Potential, phase: BlochPhase, energy: float, safety_margin: float = 1e-10) -> CountResult:
    """Number of fiber eigenvalues strictly below ``energy``.

    Refuses to answer (``count=None``) when an eigenvalue lies within
    ``safety_margin`` of ``energy``; the margin must exceed the eigensolver's
    residual bound.
    """
    spec = fiber_eigenvalues(potential, phase)
    if not safety_margin > spec.residual_bound:
        raise ValueError(
            f"safety_margin {safety_margin:g} must exceed the residual bound {spec.residual_bound:.3g}"
        )
    return count_from_eigenvalues(spec.eigenvalues, energy, safety_margin)


def _phase_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, str):
        return {"0": Fraction(0), "pi/2": Fraction(1, 2), "pi": Fraction(1)}[value]
    return as_pi_fraction(float(value))


def multiplicity_profile(p: int, q: int, phase=(0.0, 0.0)) -> dict[float, int]:
    """Exact multiplicities of the free fiber spectrum at a rational phase.

    ``phase`` is a :class:`BlochPhase` or a ``(theta, phi)`` pair whose entries
    are floats that are rational multiples of pi, :class:`fractions.Fraction`
    multiples of pi, or the strings ``"0"``, ``"pi/2"``, ``"pi"``.  Values are
    grouped by exact cyclotomic keys, never by float comparison.
    """
    if isinstance(phase, BlochPhase):
        phase = (phase.theta, phase.phi)
    theta, phi = (_phase_fraction(x) for x in phase)
    groups = exact_separable_multiplicities(p, q, theta, phi)
    return dict(sorted((value, mult) for value, mult in groups.values()))


def unfolded_fiber_eigenvalues(potential: Potential, period: Period, theta: float, phi: float,
                               tolerance: float = 1e-9) -> tuple[np.ndarray, float]:
    """Spectrum of the fiber of ``potential`` viewed on the larger ``period``.

    Computed with the dense solver as the union of the potential's own fibers
    at the unfolded phases ``((theta + 2 pi a)/A, (phi + 2 pi b)/B)`` where
    ``A, B`` are the period ratios.
    """
    if not potential.period.divides(period):
        raise ValueError(f"{potential.period} does not divide {period}")
    ra, rb = period.p // potential.period.p, period.q // potential.period.q
    parts, worst = [], 0.0
    for a in range(ra):
        for b in range(rb):
            mat = fiber_matrix(potential, (theta + 2 * math.pi * a) / ra, (phi + 2 * math.pi * b) / rb)
            vals, res = hermitian_eigenvalues(mat, tolerance)
            parts.append(vals)
            worst = max(worst, res)
    return np.sort(np.concatenate(parts)), worst
