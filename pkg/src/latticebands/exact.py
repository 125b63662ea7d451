"""Exact equality of sums of the form ``sum 2cos(pi m_i / N)``.

With ``z = exp(i pi / N)`` a primitive ``2N``-th root of unity,
``2cos(pi m / N) = z**m + z**-m``.  Two integer polynomials in ``z`` are equal
as algebraic numbers iff their remainders modulo the cyclotomic polynomial
``Phi_{2N}`` coincide, which gives a canonical integer key per value.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from typing import Iterable


def _poly_divmod_monic(num: list[int], den: tuple[int, ...]) -> tuple[list[int], list[int]]:
    """Divide integer polynomials (low-to-high coefficients) by a monic divisor."""
    num = list(num)
    deg = len(den) - 1
    if len(num) - 1 < deg:
        return [0], num
    quot = [0] * (len(num) - deg)
    for shift in range(len(num) - 1 - deg, -1, -1):
        coef = num[shift + deg]
        if coef:
            quot[shift] = coef
            for i, d in enumerate(den):
                num[shift + i] -= coef * d
    return quot, num[:deg]


@lru_cache(maxsize=None)
def cyclotomic_poly(n: int) -> tuple[int, ...]:
    """Integer coefficients of ``Phi_n`` from the constant term upward."""
    if n < 1:
        raise ValueError("n must be positive")
    poly = [-1] + [0] * (n - 1) + [1]
    for d in range(1, n):
        if n % d == 0:
            poly, rem = _poly_divmod_monic(poly, cyclotomic_poly(d))
            assert not any(rem)
    return tuple(poly)


def cos_sum_key(multiples: Iterable[int], n: int) -> tuple[int, ...]:
    """Canonical key of ``sum_i 2cos(pi * m_i / n)``."""
    order = 2 * n
    coeffs = [0] * order
    for m in multiples:
        coeffs[m % order] += 1
        coeffs[-m % order] += 1
    _, rem = _poly_divmod_monic(coeffs, cyclotomic_poly(order))
    rem += [0] * (len(cyclotomic_poly(order)) - 1 - len(rem))
    return tuple(rem)


def cos_sum_value(multiples: Iterable[int], n: int) -> float:
    return sum(2.0 * math.cos(math.pi * m / n) for m in multiples)


def as_pi_fraction(angle: float, max_denominator: int = 1024) -> Fraction:
    """Recover ``angle / pi`` as a small fraction, or raise if it is not one."""
    frac = Fraction(angle / math.pi).limit_denominator(max_denominator)
    if abs(float(frac) * math.pi - angle) > 1e-12:
        raise ValueError(f"phase {angle!r} is not a rational multiple of pi")
    return frac


def separable_angle_multiples(p: int, q: int, theta: Fraction, phi: Fraction) -> tuple[int, list[tuple[int, int]]]:
    """Integer angle data for every separable eigenvalue at a rational phase.

    The eigenvalues of the free fiber at ``(pi*theta, pi*phi)`` are
    ``2cos(pi (theta + 2k)/p) + 2cos(pi (phi + 2l)/q)``.  Returns a common
    denominator ``n`` and the list of integer pairs ``(m1, m2)`` such that each
    eigenvalue equals ``2cos(pi m1/n) + 2cos(pi m2/n)``, ordered by ``(k, l)``.
    """
    n = math.lcm(p * theta.denominator, q * phi.denominator)
    sx, sy = n // (p * theta.denominator), n // (q * phi.denominator)
    xs = [(theta.numerator + 2 * k * theta.denominator) * sx for k in range(p)]
    ys = [(phi.numerator + 2 * l * phi.denominator) * sy for l in range(q)]
    return n, [(a, b) for a in xs for b in ys]


def exact_separable_multiplicities(p: int, q: int, theta: Fraction, phi: Fraction) -> dict[tuple[int, ...], tuple[float, int]]:
    """Group separable eigenvalues at a rational phase by exact value.

    Returns ``{key: (value, multiplicity)}``.
    """
    n, pairs = separable_angle_multiples(p, q, theta, phi)
    zero = zero_key(n)
    groups: dict[tuple[int, ...], list] = {}
    for pair in pairs:
        key = cos_sum_key(pair, n)
        if key in groups:
            groups[key][1] += 1
        else:
            groups[key] = [0.0 if key == zero else cos_sum_value(pair, n), 1]
    return {k: (v, m) for k, (v, m) in groups.items()}


def zero_key(n: int) -> tuple[int, ...]:
    return cos_sum_key((), n)
