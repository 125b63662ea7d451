import os

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from latticebands import _kernels_py, kernels
from latticebands.laplace1d import eigenvalues_1d

try:
    from latticebands import _kernels as compiled
except ImportError:  # pragma: no cover
    compiled = None

needs_compiled = pytest.mark.skipif(compiled is None, reason="compiled extension not built")


def operands(p, q, n_a, n_b, seed):
    rng = np.random.default_rng(seed)
    a = np.ascontiguousarray(eigenvalues_1d(p, rng.uniform(0, np.pi, n_a)))
    b = np.ascontiguousarray(eigenvalues_1d(q, rng.uniform(0, np.pi, n_b)))
    return a, b


def brute_force(a, b, energy):
    sums = np.sort((a[:, None, :, None] + b[None, :, None, :]).reshape(len(a), len(b), -1), axis=-1)
    return sums, np.count_nonzero(sums < energy, axis=-1), np.abs(sums - energy).min(axis=-1)


class TestFallback:
    def test_extrema_brute_force(self):
        a, b = operands(3, 4, 6, 5, 0)
        sums, _, _ = brute_force(a, b, 0.0)
        lo, hi = _kernels_py.separable_band_extrema(a, b)
        np.testing.assert_array_equal(lo, sums.min(axis=(0, 1)))
        np.testing.assert_array_equal(hi, sums.max(axis=(0, 1)))

    @given(st.integers(1, 6), st.integers(1, 6), st.floats(-4.5, 4.5), st.integers(0, 999))
    @settings(max_examples=40, deadline=None)
    def test_counts_brute_force(self, p, q, energy, seed):
        a, b = operands(p, q, 4, 3, seed)
        _, counts, margins = brute_force(a, b, energy)
        c, m = _kernels_py.separable_count_grid(a, b, energy)
        np.testing.assert_array_equal(c, counts)
        np.testing.assert_allclose(m, margins, atol=1e-15)


@needs_compiled
class TestCompiledAgreesWithFallback:
    @pytest.mark.parametrize("p, q", [(1, 1), (2, 3), (5, 4), (10, 10), (13, 2)])
    def test_extrema(self, p, q):
        a, b = operands(p, q, 17, 23, p * q)
        for x, y in zip(compiled.separable_band_extrema(a, b), _kernels_py.separable_band_extrema(a, b)):
            np.testing.assert_array_equal(x, y)

    @given(st.integers(1, 8), st.integers(1, 8), st.floats(-4.5, 4.5), st.integers(0, 999))
    @settings(max_examples=60, deadline=None)
    def test_counts(self, p, q, energy, seed):
        a, b = operands(p, q, 5, 6, seed)
        c1, m1 = compiled.separable_count_grid(a, b, energy)
        c2, m2 = _kernels_py.separable_count_grid(a, b, energy)
        np.testing.assert_array_equal(c1, c2)
        np.testing.assert_array_equal(m1, m2)

    def test_exact_ties(self):
        # energies equal to a sum on the grid must give identical counts and zero margins
        a, b = operands(4, 4, 3, 3, 1)
        energy = float(a[1, 2] + b[0, 1])
        c1, m1 = compiled.separable_count_grid(a, b, energy)
        c2, m2 = _kernels_py.separable_count_grid(a, b, energy)
        np.testing.assert_array_equal(c1, c2)
        assert m1[1, 0] == m2[1, 0] == 0.0


def test_backend_selected():
    assert kernels.BACKEND in ("compiled", "python")
    if os.environ.get("LATTICEBANDS_PURE_PYTHON"):
        assert kernels.BACKEND == "python"
    elif compiled is not None:
        assert kernels.BACKEND == "compiled"
