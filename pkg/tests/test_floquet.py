import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from latticebands.core import BlochPhase, Period, Potential
from latticebands.floquet import (
    SEPARABLE_RESIDUAL,
    EigensolverError,
    NotHermitianError,
    build_fiber,
    count_below,
    eigvalsh_stack,
    fiber_eigenvalues,
    fiber_matrix,
    fiber_stack,
    hermitian_eigenvalues,
    multiplicity_profile,
    separable_eigenvalues,
    unfolded_fiber_eigenvalues,
)

phases = st.builds(BlochPhase, st.floats(0, math.pi), st.floats(0, math.pi))


def random_potential(p, q, seed, norm=1.0):
    return Potential.random(Period(p, q), norm, np.random.default_rng(seed))


def _frobenius_oracle(v: Potential, theta: float, phi: float) -> float:
    p, q = v.period.p, v.period.q

    def diag(r, t):
        return 2 * math.cos(t) if r == 1 else 0.0

    def offdiag(r, t):
        if r == 1:
            return 0.0
        if r == 2:
            return 2 * abs(1 + np.exp(1j * t)) ** 2
        return 2.0 * r

    d = v.values + diag(p, theta) + diag(q, phi)
    return float(np.sum(d**2) + q * offdiag(p, theta) + p * offdiag(q, phi))


class TestFiberMatrix:
    def test_hermitian(self):
        m = fiber_matrix(random_potential(3, 4, 0), 0.4, 2.1)
        np.testing.assert_array_equal(m, m.conj().T)

    def test_1x1(self):
        m = fiber_matrix(Potential.constant(Period(1, 1), 0.25), 0.3, 1.2)
        assert m[0, 0] == pytest.approx(2 * math.cos(0.3) + 2 * math.cos(1.2) + 0.25)

    def test_checkerboard_charpoly(self):
        # oracle: charpoly prod (x^2 - delta^2 - s^2) over s = a + b, a - b with a, b = 2cos(th/2), 2cos(ph/2)
        delta = 0.5
        for theta, phi in [(0.0, 0.0), (0.7, 2.2), (math.pi, math.pi), (math.pi / 2, 0.1)]:
            m = fiber_matrix(Potential.checkerboard(delta), theta, phi)
            a, b = 2 * math.cos(theta / 2), 2 * math.cos(phi / 2)
            expected = np.polymul([1, 0, -(delta**2) - (a + b) ** 2], [1, 0, -(delta**2) - (a - b) ** 2])
            np.testing.assert_allclose(np.real(np.poly(m)), expected, atol=1e-10)
            free = fiber_matrix(Potential.zero(Period(2, 2)), theta, phi)
            np.testing.assert_allclose(m @ m, free @ free + delta**2 * np.eye(4), atol=1e-12)

    def test_fiber_stack_matches(self):
        v = random_potential(3, 5, 3)
        th = np.array([0.0, 0.5, math.pi])
        ph = np.array([math.pi, 1.0, 0.2])
        stack = fiber_stack(v, th, ph)
        for k in range(3):
            np.testing.assert_allclose(stack[k], fiber_matrix(v, th[k], ph[k]), atol=1e-15)

    @pytest.mark.parametrize("p, q", [(1, 1), (1, 2), (2, 1), (2, 2), (1, 4), (3, 2)])
    def test_fiber_stack_small_periods(self, p, q):
        v = random_potential(p, q, p * 10 + q)
        stack = fiber_stack(v, [0.3, 2.0], [1.4, 0.0])
        np.testing.assert_allclose(stack[0], fiber_matrix(v, 0.3, 1.4), atol=1e-15)
        np.testing.assert_allclose(stack[1], fiber_matrix(v, 2.0, 0.0), atol=1e-15)

    @given(st.integers(1, 6), st.integers(1, 6), phases, st.integers(0, 10**6))
    @settings(max_examples=60, deadline=None)
    def test_trace_and_frobenius(self, p, q, phase, seed):
        v = random_potential(p, q, seed)
        fib = build_fiber(v, phase)
        trace = float(np.sum(v.values)) + (q * 2 * math.cos(phase.theta) if p == 1 else 0) + (
            p * 2 * math.cos(phase.phi) if q == 1 else 0
        )
        assert fib.trace == pytest.approx(trace, abs=1e-12)
        frob = _frobenius_oracle(v, phase.theta, phase.phi)
        assert np.linalg.norm(fib.entries) ** 2 == pytest.approx(frob, rel=1e-12)
        vals = fiber_eigenvalues(v, phase).eigenvalues
        assert np.sum(vals) == pytest.approx(trace, abs=1e-9)
        assert np.sum(vals**2) == pytest.approx(frob, rel=1e-9)


class TestEigensolvers:
    def test_not_hermitian(self):
        with pytest.raises(NotHermitianError):
            hermitian_eigenvalues(np.array([[0, 1], [0, 0]], dtype=complex))
        with pytest.raises(NotHermitianError):
            hermitian_eigenvalues(np.zeros((2, 3)))

    def test_nonfinite_raises(self):
        with pytest.raises(EigensolverError):
            hermitian_eigenvalues(np.array([[np.nan, 0], [0, 1.0]]))

    def test_residual_reported(self):
        vals, res = hermitian_eigenvalues(fiber_matrix(random_potential(4, 4, 1), 0.2, 0.9))
        assert vals.shape == (16,) and 0 <= res < 1e-12
        assert np.all(np.diff(vals) >= 0)

    def test_stack_bound(self):
        stack = fiber_stack(random_potential(3, 3, 2), np.linspace(0, 3, 5), np.linspace(3, 0, 5))
        vals, bound = eigvalsh_stack(stack)
        assert vals.shape == (5, 9) and 0 < bound < 1e-12


class TestSeparable:
    @pytest.mark.parametrize("p, q", [(1, 1), (2, 3), (5, 4), (10, 10), (7, 1)])
    def test_matches_dense(self, p, q):
        zero = Potential.zero(Period(p, q))
        for theta in np.linspace(0, math.pi, 4):
            for phi in np.linspace(0, math.pi, 4):
                ph = BlochPhase(theta, phi)
                dense, _ = hermitian_eigenvalues(build_fiber(zero, ph).entries)
                np.testing.assert_allclose(separable_eigenvalues(p, q, ph), dense, atol=1e-12)

    def test_zero_potential_path(self):
        spec = fiber_eigenvalues(Potential.zero(Period(3, 4)), BlochPhase(0.1, 0.2))
        assert spec.residual_bound == SEPARABLE_RESIDUAL


class TestIdentities:
    @given(st.integers(1, 5), st.integers(1, 5), st.floats(0, math.pi), st.floats(0, math.pi), st.integers(0, 999))
    @settings(max_examples=40, deadline=None)
    def test_phase_reflection(self, p, q, theta, phi, seed):
        # the fiber at (2pi - theta, 2pi - phi) is the complex conjugate of the one at (theta, phi)
        v = random_potential(p, q, seed)
        a = np.linalg.eigvalsh(fiber_matrix(v, theta, phi))
        b = np.linalg.eigvalsh(fiber_matrix(v, 2 * math.pi - theta, 2 * math.pi - phi))
        np.testing.assert_allclose(a, b, atol=1e-12)

    @given(st.integers(1, 5), st.integers(1, 5), phases, st.integers(0, 999))
    @settings(max_examples=40, deadline=None)
    def test_lipschitz_in_potential(self, p, q, phase, seed):
        v = random_potential(p, q, seed)
        w = random_potential(p, q, seed + 1, norm=0.3)
        a = fiber_eigenvalues(v, phase).eigenvalues
        b = fiber_eigenvalues(v + w, phase).eigenvalues
        assert np.max(np.abs(a - b)) <= w.sup_norm + 1e-12

    def test_constant_shift(self):
        ph = BlochPhase(0.4, 1.3)
        a = fiber_eigenvalues(Potential.zero(Period(3, 2)), ph).eigenvalues
        b = fiber_eigenvalues(Potential.constant(Period(3, 2), 0.7), ph).eigenvalues
        np.testing.assert_allclose(b, a + 0.7, atol=1e-12)

    @pytest.mark.parametrize("base, big", [((1, 2), (3, 4)), ((2, 3), (4, 6)), ((3, 1), (3, 5))])
    def test_unfolding(self, base, big):
        v = random_potential(*base, seed=5)
        ph = (0.6, 2.4)
        vals, res = unfolded_fiber_eigenvalues(v, Period(*big), *ph)
        direct, _ = hermitian_eigenvalues(fiber_matrix(v.retile(Period(*big)), *ph))
        np.testing.assert_allclose(vals, direct, atol=1e-11)
        assert res < 1e-12

    def test_unfolding_requires_divisibility(self):
        with pytest.raises(ValueError):
            unfolded_fiber_eigenvalues(Potential.zero(Period(2, 2)), Period(3, 4), 0.0, 0.0)


class TestCounts:
    def test_count_below(self):
        ph = BlochPhase(0.0, 0.0)
        zero = Potential.zero(Period(2, 2))
        # spectrum at (0,0) on 2x2 is {-4, 0, 0, 4}
        assert count_below(zero, ph, -1.0).count == 1
        assert count_below(zero, ph, 1.0).count == 3
        res = count_below(zero, ph, 1e-13)
        assert res.too_close and res.margin < 1e-12

    def test_margin_must_beat_residual(self):
        with pytest.raises(ValueError):
            count_below(Potential.zero(Period(2, 2)), BlochPhase(0, 0), 0.5, safety_margin=0.0)

    def test_dense_count(self):
        v = Potential.checkerboard(0.5)
        assert count_below(v, BlochPhase(0.0, 0.0), 0.0).count == 2


class TestMultiplicities:
    def test_4x4_corners(self):
        prof = multiplicity_profile(4, 4, ("0", "0"))
        assert list(prof.values()) == [1, 4, 6, 4, 1]
        prof = multiplicity_profile(4, 4, BlochPhase(math.pi, math.pi))
        assert list(prof.values()) == [4, 8, 4]

    def test_matches_float_grouping_generic(self):
        prof = multiplicity_profile(3, 5, (math.pi / 3, 0.0))
        vals = separable_eigenvalues(3, 5, BlochPhase(math.pi / 3, 0.0))
        assert sum(prof.values()) == 15
        for value, mult in prof.items():
            assert np.count_nonzero(np.abs(vals - value) < 1e-9) == mult

    def test_irrational_phase_rejected(self):
        with pytest.raises(ValueError):
            multiplicity_profile(2, 2, (1.0, 0.0))
