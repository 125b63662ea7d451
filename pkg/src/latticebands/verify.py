"""Executable checks that small periodic potentials cannot fragment the spectrum.

The central object is an :class:`InteriorCertificate`: two Brillouin-zone
points whose free fibers have different strict eigenvalue counts below an
energy ``E``.  If the counts are ``c_a < c_b`` then band ``c_a + 1`` takes
values on both sides of ``E``, so ``E`` lies in the interior of that band, and
a potential smaller than the distance to the band edges cannot open a gap
there.

Search strategies, tried in order:

``corners``
    ``(0, 0)`` against ``(pi, pi)`` on the square even period ``(r, r)``;
    works for every non-exceptional energy by a parity argument.
``perturbed_corners``
    for nonzero exceptional energies, push off the corners to
    ``(eps, 0)``, ``((1 + delta) eps, eps)`` and ``(pi - eps, pi)``.
``zero_energy``
    for ``E = 0`` with an odd period, compare ``(pi/2 -+ eps, 0)`` on the
    period with the odd component first and the other divisible by four.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .bands import DEFAULT_RESOLUTION, find_gaps, nested_spectra, spectrum
from .core import BlochPhase, EnergyInterval, Period, Potential, SpectrumApproximation
from .exact import cos_sum_key, exact_separable_multiplicities, zero_key
from .floquet import SEPARABLE_RESIDUAL, CountResult, count_from_eigenvalues, separable_eigenvalues_raw, unfolded_fiber_eigenvalues
from .laplace1d import derivative_magnitude

log = logging.getLogger(__name__)

SAFETY_MARGIN = 10 * SEPARABLE_RESIDUAL
EPS_START, EPS_FLOOR = 1e-1, 1e-6
DEFAULT_DELTA = 0.25
MATCH_TOL = 1e-9


class CertificationError(RuntimeError):
    pass


class ResolutionTooCoarse(CertificationError):
    def __init__(self, message: str, required_resolution: int):
        super().__init__(f"{message}; need resolution >= {required_resolution}")
        self.required_resolution = required_resolution


# ---------------------------------------------------------------- exceptional set


@dataclass(frozen=True)
class ExceptionalSet:
    """Sums ``2cos(pi i/r) + 2cos(pi j/r)``, ``0 <= i, j <= r``, deduplicated exactly."""

    r: int
    values: tuple[float, ...]
    keys: tuple[tuple[int, ...], ...]
    pairs: tuple[tuple[tuple[int, int], ...], ...]

    def __len__(self) -> int:
        return len(self.values)

    def __contains__(self, energy: float) -> bool:
        return self.locate(energy) is not None

    def locate(self, energy: float, tol: float = MATCH_TOL) -> int | None:
        """Index of the exceptional value within ``tol`` of ``energy``, if any."""
        pos = int(np.searchsorted(self.values, energy))
        best = None
        for idx in (pos - 1, pos):
            if 0 <= idx < len(self.values) and abs(self.values[idx] - energy) <= tol:
                if best is None or abs(self.values[idx] - energy) < abs(self.values[best] - energy):
                    best = idx
        return best

    def distance(self, energy: float) -> float:
        return float(np.min(np.abs(np.asarray(self.values) - energy)))


def _pair_value(i: int, j: int, r: int) -> float:
    return 2 * math.cos(math.pi * i / r) + 2 * math.cos(math.pi * j / r)


@lru_cache(maxsize=64)
def exceptional_energies(r: int) -> ExceptionalSet:
    if r < 2 or r % 2:
        raise ValueError(f"exceptional energies need an even r >= 2, got {r}; normalize the period first")
    groups: dict[tuple[int, ...], list] = {}
    zero = zero_key(r)
    for i in range(r + 1):
        for j in range(i, r + 1):
            key = cos_sum_key((i, j), r)
            if key not in groups:
                # antisymmetrized so that the set is exactly symmetric under negation
                value = 0.0 if key == zero else 0.5 * (_pair_value(i, j, r) - _pair_value(r - i, r - j, r))
                groups[key] = [value, []]
            groups[key][1].append((i, j))
    items = sorted(groups.items(), key=lambda kv: kv[1][0])
    return ExceptionalSet(
        r,
        tuple(v for _, (v, _) in items),
        tuple(k for k, _ in items),
        tuple(tuple(ps) for _, (_, ps) in items),
    )


# ---------------------------------------------------------------- certificates


@dataclass(frozen=True)
class InteriorCertificate:
    """Witness that ``energy`` is interior to band ``witness_band`` of the free Laplacian on ``period``."""

    energy: float
    phase_a: BlochPhase
    phase_b: BlochPhase
    count_a: int
    count_b: int
    witness_band: int
    margin: float
    period: Period
    strategy: str
    splitting: dict | None = None

    def __post_init__(self):
        if self.count_a == self.count_b:
            raise ValueError("certificate counts must differ")
        if not self.margin > 0:
            raise ValueError("certificate margin must be positive")
        if self.witness_band != min(self.count_a, self.count_b) + 1:
            raise ValueError("witness band must be min(count_a, count_b) + 1")

    def to_dict(self) -> dict:
        out = {
            "E": self.energy,
            "phase_a": list(self.phase_a.in_units_of_pi()),
            "phase_b": list(self.phase_b.in_units_of_pi()),
            "count_a": self.count_a,
            "count_b": self.count_b,
            "witness_band": self.witness_band,
            "margin": self.margin,
            "period": [self.period.p, self.period.q],
            "strategy": self.strategy,
        }
        if self.splitting is not None:
            out["splitting"] = dict(self.splitting)
        return out


@dataclass(frozen=True)
class Attempt:
    phase_a: tuple[float, float]
    phase_b: tuple[float, float]
    count_a: int | None
    count_b: int | None
    strategy: str

    def to_dict(self) -> dict:
        return {
            "phase_a": [x / math.pi for x in self.phase_a],
            "phase_b": [x / math.pi for x in self.phase_b],
            "count_a": self.count_a,
            "count_b": self.count_b,
            "strategy": self.strategy,
        }


@dataclass(frozen=True)
class CertificationFailure:
    energy: float
    period: Period
    attempts: tuple[Attempt, ...]
    reason: str

    def to_dict(self) -> dict:
        return {
            "E": self.energy,
            "period": [self.period.p, self.period.q],
            "reason": self.reason,
            "attempts": [a.to_dict() for a in self.attempts],
        }


def _free_count(period: Period, theta: float, phi: float, energy: float) -> CountResult:
    vals = separable_eigenvalues_raw(period.p, period.q, theta, phi)
    return count_from_eigenvalues(vals, energy, SAFETY_MARGIN)


def _eps_schedule():
    eps = EPS_START
    while eps >= EPS_FLOOR:
        yield eps
        eps /= 2


def perturbation_delta(energy: float, r: int) -> float:
    """Slope excess for the ``((1 + delta) eps, eps)`` direction near ``(0, 0)``.

    Over pairs of doubly degenerate eigenvalues ``mu_a + mu_b = E`` of the
    untwisted 1D Laplacian with ``|mu_a| < |mu_b|``, ``delta`` must stay below
    ``min |mu_a'| / |mu_b'| - 1``; half of that bound is returned, or
    :data:`DEFAULT_DELTA` when no pair constrains it (or it is looser).
    """
    ex = exceptional_energies(r)
    idx = ex.locate(energy)
    if idx is None:
        return DEFAULT_DELTA
    ratios = []
    for i, j in ex.pairs[idx]:
        # doubly degenerate at phase 0: 2cos(pi j/r) with j even, 0 < j < r
        if not (i % 2 == 0 and j % 2 == 0 and 0 < i < r and 0 < j < r):
            continue
        mu_i, mu_j = 2 * math.cos(math.pi * i / r), 2 * math.cos(math.pi * j / r)
        if abs(abs(mu_i) - abs(mu_j)) < 1e-12:
            continue
        small, large = sorted((mu_i, mu_j), key=abs)
        ratios.append(derivative_magnitude(small, r) / derivative_magnitude(large, r))
    if not ratios:
        return DEFAULT_DELTA
    return min(DEFAULT_DELTA, 0.5 * (min(ratios) - 1.0))


def _make_certificate(energy, period, a, b, ca: CountResult, cb: CountResult, strategy, splitting=None):
    return InteriorCertificate(
        energy=energy,
        phase_a=BlochPhase(*a),
        phase_b=BlochPhase(*b),
        count_a=ca.count,
        count_b=cb.count,
        witness_band=min(ca.count, cb.count) + 1,
        margin=min(ca.margin, cb.margin),
        period=period,
        strategy=strategy,
        splitting=splitting,
    )


def _try_pair(period, energy, a, b, strategy, attempts):
    ca = _free_count(period, a[0], a[1], energy)
    cb = _free_count(period, b[0], b[1], energy)
    attempts.append(Attempt(a, b, ca.count, cb.count, strategy))
    if ca.too_close or cb.too_close or ca.count == cb.count:
        return None
    return _make_certificate(energy, period, a, b, ca, cb, strategy)


def _perturbed_corner_search(energy: float, period: Period, attempts: list) -> InteriorCertificate | None:
    r = period.p
    delta = perturbation_delta(energy, r)
    pi = math.pi
    for eps in _eps_schedule():
        lower = [(0.0, 0.0), (eps, 0.0), ((1 + delta) * eps, eps)]
        upper = [(pi, pi), (pi - eps, pi)]
        for a in lower:
            for b in upper:
                if a == (0.0, 0.0) and b == (pi, pi):
                    continue
                cert = _try_pair(period, energy, a, b, "perturbed_corners", attempts)
                if cert is not None:
                    return cert
    return None


def mirror_certificate(cert: InteriorCertificate) -> InteriorCertificate:
    """Certificate for ``-E`` from one for ``E`` on an even square period.

    The free fiber spectrum on an even period is symmetric about zero at every
    phase (conjugate by the staggered sign ``(-1)^(n+m)``), so the same phase
    points work with counts ``N - c``.
    """
    n = cert.period.size
    ca, cb = n - cert.count_a, n - cert.count_b
    return InteriorCertificate(
        energy=-cert.energy,
        phase_a=cert.phase_a,
        phase_b=cert.phase_b,
        count_a=ca,
        count_b=cb,
        witness_band=min(ca, cb) + 1,
        margin=cert.margin,
        period=cert.period,
        strategy=cert.strategy,
        splitting=cert.splitting,
    )


def zero_energy_splitting(period: Period, eps: float) -> dict:
    """Exact count data at ``(pi/2, 0)`` for an odd-by-multiple-of-four period.

    ``s`` eigenvalues lie strictly below zero, zero has multiplicity
    ``4t + 2``, and ``ell_minus``/``ell_plus`` are the extra counts at
    ``(pi/2 - eps, 0)`` and ``(pi/2 + eps, 0)``.
    """
    groups = exact_separable_multiplicities(period.p, period.q, Fraction(1, 2), Fraction(0))
    zero_mult = 0
    below = 0
    for value, mult in groups.values():
        if value == 0.0:
            zero_mult += mult
        elif value < 0:
            below += mult
    minus = _free_count(period, math.pi / 2 - eps, 0.0, 0.0)
    plus = _free_count(period, math.pi / 2 + eps, 0.0, 0.0)
    return {
        "s": below,
        "zero_multiplicity": zero_mult,
        "t": (zero_mult - 2) // 4,
        "ell_minus": None if minus.too_close else minus.count - below,
        "ell_plus": None if plus.too_close else plus.count - below,
        "eps": eps,
    }


def _zero_energy_search(period: Period, attempts: list) -> InteriorCertificate | None:
    half = math.pi / 2
    for eps in _eps_schedule():
        a, b = (half - eps, 0.0), (half + eps, 0.0)
        cert = _try_pair(period, 0.0, a, b, "zero_energy", attempts)
        if cert is not None:
            splitting = zero_energy_splitting(period, eps)
            return InteriorCertificate(**{**cert.__dict__, "splitting": splitting})
    return None


def certify_interior(energy: float, period: Period, strategy: str = "auto",
                     recheck: bool = True) -> InteriorCertificate | CertificationFailure:
    """Look for an interior-of-band certificate for the free Laplacian at ``energy``.

    Parameters
    ----------
    energy : float
        Energy in ``(-4, 4)``.
    period : Period
        The period the potential is assumed to have.  Certificates are built on
        ``period.normalized_even()`` (or ``period.normalized_odd()`` at ``E = 0``).
    strategy : {"auto", "corners_only"}
    recheck : bool
        Re-diagonalize both fibers of a candidate with the dense solver (via the
        original period and unfolded phases) and keep it only if the strict
        inequalities survive.

    Returns
    -------
    InteriorCertificate or CertificationFailure
        A failure is expected only for ``E = 0`` when both periods are even.
    """
    if not -4.0 < energy < 4.0:
        raise ValueError(f"energy must lie in (-4, 4), got {energy}")
    if strategy not in ("auto", "corners_only"):
        raise ValueError(f"unknown strategy {strategy!r}")
    square = period.normalized_even()
    attempts: list[Attempt] = []

    def accept(cert):
        if cert is None:
            return None
        if recheck and not recheck_certificate(cert, period):
            log.warning("dense recheck rejected certificate %s", cert)
            return None
        return cert

    cert = accept(_try_pair(square, energy, (0.0, 0.0), (math.pi, math.pi), "corners", attempts))
    if cert is not None or strategy == "corners_only":
        return cert or CertificationFailure(energy, square, tuple(attempts), "corner counts agree or touch E")

    if abs(energy) > 1e-12:
        # work on E < 0 and mirror
        sub: list[Attempt] = []
        found = _perturbed_corner_search(-abs(energy), square, sub)
        attempts.extend(sub)
        if found is not None:
            cert = accept(found if energy < 0 else mirror_certificate(found))
            if cert is not None:
                return cert
        return CertificationFailure(energy, square, tuple(attempts), "perturbed corners exhausted")

    if period.has_odd:
        odd = period.normalized_odd()
        cert = accept(_zero_energy_search(odd, attempts))
        if cert is not None:
            return cert
        return CertificationFailure(energy, odd, tuple(attempts), "zero-energy perturbation exhausted")
    return CertificationFailure(energy, square, tuple(attempts), "E = 0 with both periods even")


@lru_cache(maxsize=256)
def _dense_free_spectrum(base: Period, period: Period, theta: float, phi: float):
    return unfolded_fiber_eigenvalues(Potential.zero(base), period, theta, phi, tolerance=1e-11)


def recheck_certificate(cert: InteriorCertificate, period: Period) -> bool:
    """Independent check of a certificate with the dense eigensolver.

    The fibers are rebuilt on ``period`` (the caller's period, swapped if the
    certificate uses swapped axes) at unfolded phases, so neither the closed
    form nor the normalized period enters the check.
    """
    base = period if period.divides(cert.period) else Period(period.q, period.p)
    w = cert.witness_band - 1
    vals_a, res_a = _dense_free_spectrum(base, cert.period, cert.phase_a.theta, cert.phase_a.phi)
    vals_b, res_b = _dense_free_spectrum(base, cert.period, cert.phase_b.theta, cert.phase_b.phi)
    if cert.count_a > cert.count_b:
        (big, rb), (small, rs) = (vals_a, res_a), (vals_b, res_b)
    else:
        (big, rb), (small, rs) = (vals_b, res_b), (vals_a, res_a)
    e = cert.energy
    return bool(big[w] + rb < e < small[w] - rs
                and np.count_nonzero(vals_a < e) == cert.count_a
                and np.count_nonzero(vals_b < e) == cert.count_b)


# ---------------------------------------------------------------- theorem sweep


@dataclass(frozen=True)
class EnergyRecord:
    energy: float
    kind: str  # regular | exceptional | zero | edge
    status: str  # certified | uncertified | excluded
    certificate: InteriorCertificate | None = None
    failure: CertificationFailure | None = None
    expected: bool = True  # False when the theorem allows this energy to stay uncertified

    def to_dict(self) -> dict:
        out = {"E": self.energy, "kind": self.kind, "status": self.status}
        if self.certificate is not None:
            out["certificate"] = self.certificate.to_dict()
        if self.failure is not None:
            out["attempts"] = [a.to_dict() for a in self.failure.attempts]
            out["reason"] = self.failure.reason
        return out


@dataclass(frozen=True)
class SweepReport:
    period: Period
    normalized_period: Period
    zero_period: Period | None
    records: tuple[EnergyRecord, ...]

    @property
    def failures(self) -> list[EnergyRecord]:
        return [r for r in self.records if r.status == "uncertified" and r.expected]

    def record_for(self, energy: float, tol: float = 1e-12) -> EnergyRecord | None:
        for rec in self.records:
            if abs(rec.energy - energy) <= tol:
                return rec
        return None

    def to_dict(self) -> dict:
        statuses = [r.status for r in self.records]
        return {
            "period": [self.period.p, self.period.q],
            "normalized_period": [self.normalized_period.p, self.normalized_period.q],
            "zero_energy_period": None if self.zero_period is None else [self.zero_period.p, self.zero_period.q],
            "energies": [r.to_dict() for r in self.records],
            "summary": {
                "failures": len(self.failures),
                "certified": statuses.count("certified"),
                "uncertified": statuses.count("uncertified"),
                "excluded": statuses.count("excluded"),
            },
        }


def sweep_energies(period: Period, energy_samples: int, exceptional: str | int = "all") -> list[tuple[float, str]]:
    """Energies visited by :func:`verify_theorem_sweep` with their kinds.

    Regular samples are ``-4 + 8k/(N+1)``; samples within ``1e-9`` of an
    exceptional energy are replaced by it.  ``exceptional`` is ``"all"`` or the
    number of exceptional energies to spot-check (evenly spaced by rank).
    """
    r = period.normalized_even().p
    ex = exceptional_energies(r)
    chosen: dict[float, str] = {}
    for k in range(1, energy_samples + 1):
        e = -4.0 + 8.0 * k / (energy_samples + 1)
        idx = ex.locate(e)
        if idx is None:
            chosen[e] = "regular"
        else:
            chosen[ex.values[idx]] = "exceptional"
    ex_values = list(ex.values)
    if exceptional != "all":
        count = int(exceptional)
        if count < len(ex_values):
            picks = np.unique(np.linspace(0, len(ex_values) - 1, max(count, 2)).round().astype(int))
            ex_values = [ex_values[i] for i in picks]
    for v in ex_values:
        chosen[v] = "exceptional"
    out = []
    for e, kind in sorted(chosen.items()):
        if abs(e) >= 4.0 - 1e-12:
            kind = "edge"
        elif e == 0.0:
            kind = "zero"
        out.append((e, kind))
    if not any(kind == "zero" for _, kind in out):
        out.append((0.0, "zero"))
        out.sort()
    return out


def verify_theorem_sweep(period: Period, energy_samples: int = 200, exceptional: str | int = "all",
                         recheck: bool = True) -> SweepReport:
    """Certify band-interior membership over a sample of energies in ``(-4, 4)``.

    Edge energies ``+-4`` are excluded.  ``E = 0`` is always attempted; when
    both periods are even it is expected to stay uncertified and does not
    count as a failure.
    """
    records = []
    for energy, kind in sweep_energies(period, energy_samples, exceptional):
        if kind == "edge":
            records.append(EnergyRecord(energy, kind, "excluded"))
            continue
        expected = not (kind == "zero" and not period.has_odd)
        result = certify_interior(energy, period, recheck=recheck)
        if isinstance(result, InteriorCertificate):
            records.append(EnergyRecord(energy, kind, "certified", certificate=result, expected=expected))
        else:
            records.append(EnergyRecord(energy, kind, "uncertified", failure=result, expected=expected))
    zero_period = period.normalized_odd() if period.has_odd else None
    return SweepReport(period, period.normalized_even(), zero_period, tuple(records))


# ---------------------------------------------------------------- potentials and compliance


def kruger_gap(delta: float, resolution: int = DEFAULT_RESOLUTION) -> SpectrumApproximation:
    """Spectrum of the Laplacian plus the checkerboard potential ``delta (-1)^(n+m)``.

    Checks that it has two components with inner edges ``-+delta`` and outer
    edges ``-+sqrt(16 + delta**2)`` to within the error bound.

    Raises
    ------
    ResolutionTooCoarse
        If the grid cannot separate a gap of width ``2 delta``.
    CertificationError
        If the computed spectrum disagrees with the expected shape.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    # grid_error for period (2, 2) is exactly the grid step
    required = math.ceil(math.pi / delta) + 2
    if math.pi / (resolution - 1) >= delta:
        raise ResolutionTooCoarse(f"gap of width {2 * delta} not resolvable at resolution {resolution}", required)
    spec = spectrum(Potential.checkerboard(delta), resolution)
    outer = math.sqrt(16 + delta * delta)
    tol = spec.error_bound
    if spec.component_count != 2:
        raise CertificationError(f"expected two components, got {spec.component_count}")
    (a, b) = spec.intervals
    edges = [(a.lo, -outer), (a.hi, -delta), (b.lo, delta), (b.hi, outer)]
    for got, want in edges:
        if abs(got - want) > tol:
            raise CertificationError(f"edge {got} differs from {want} by more than {tol}")
    return spec


def limit_periodic_truncation(layers: Sequence[tuple[Potential, float]]) -> Potential:
    """Sum ``sum_j amplitude_j * V_j`` of layers with nested periods.

    Each layer shape must satisfy ``||V_j||_inf <= 1`` so the result has sup
    norm at most the sum of amplitudes.
    """
    if not layers:
        raise ValueError("need at least one layer")
    for (v, amp), (w, _) in zip(layers, layers[1:]):
        if not v.period.divides(w.period):
            raise ValueError(f"periods not nested: {v.period} does not divide {w.period}")
    final = layers[-1][0].period
    total = np.zeros((final.p, final.q))
    for v, amp in layers:
        if not amp > 0:
            raise ValueError("amplitudes must be positive")
        if v.sup_norm > 1.0 + 1e-12:
            raise ValueError("layer shapes must have sup norm at most 1")
        total += amp * v.retile(final).values
    return Potential(final, total)


@dataclass(frozen=True)
class ComplianceRecord:
    """Component counts at two nested resolutions against the small-coupling bound."""

    coupling: float
    allowed: int
    counts: tuple[int, int]
    gaps: tuple[EnergyInterval, ...]
    gaps_contain_zero: bool

    @property
    def agree(self) -> bool:
        return self.counts[0] == self.counts[1]

    @property
    def compliant(self) -> bool:
        """Violations need both resolutions to exceed the bound, or a certified gap away from 0."""
        over = all(c > self.allowed for c in self.counts)
        return not over and self.gaps_contain_zero

    def to_dict(self) -> dict:
        return {
            "lambda": self.coupling,
            "allowed": self.allowed,
            "counts": list(self.counts),
            "gaps": [[g.lo, g.hi] for g in self.gaps],
            "gaps_contain_zero": self.gaps_contain_zero,
            "compliant": self.compliant,
        }


def check_compliance(potential: Potential, resolution: int = DEFAULT_RESOLUTION, coupling: float = 1.0,
                     threads: int = 1) -> ComplianceRecord:
    """Component count of ``Delta + potential`` at ``resolution`` and ``2*resolution - 1``."""
    allowed = 1 if potential.period.has_odd else 2
    coarse, fine = nested_spectra(potential, resolution, threads)
    gaps = tuple(find_gaps(fine, potential))
    return ComplianceRecord(
        coupling,
        allowed,
        (coarse.component_count, fine.component_count),
        gaps,
        all(g.lo < 0.0 < g.hi for g in gaps),
    )


@dataclass(frozen=True)
class ThresholdResult:
    largest_compliant: float | None
    first_violation: float | None
    records: tuple[ComplianceRecord, ...] = field(default=())

    def to_dict(self) -> dict:
        return {
            "largest_compliant": self.largest_compliant,
            "first_violation": self.first_violation,
            "records": [r.to_dict() for r in self.records],
        }


def estimate_threshold(period: Period, family: Callable[[Period], Potential], lambda_grid: Sequence[float],
                       resolution: int = DEFAULT_RESOLUTION, threads: int = 1) -> ThresholdResult:
    """Scan couplings ``lambda`` for ``Delta + lambda V`` with ``V = family(period)``.

    Returns the largest coupling below the first violation that complies with
    the component bound (one component if a period is odd, else two with any
    gap containing zero).
    """
    grid = list(lambda_grid)
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise ValueError("lambda_grid must be ascending")
    shape = family(period)
    records = []
    largest = first_bad = None
    for lam in grid:
        rec = check_compliance(shape.scaled(lam), resolution, lam, threads)
        records.append(rec)
        if rec.compliant and first_bad is None:
            largest = lam
        elif not rec.compliant and first_bad is None:
            first_bad = lam
    return ThresholdResult(largest, first_bad, tuple(records))
