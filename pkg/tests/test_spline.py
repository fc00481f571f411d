import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.interpolate import CubicSpline

from vchest.spline import natural_cubic


class TestNaturalCubic:
    def test_matches_scipy(self, rng):
        x = np.sort(rng.choice(np.arange(-26, 27), 12, replace=False)).astype(float)
        y = rng.standard_normal(12) + 1j * rng.standard_normal(12)
        xq = np.linspace(x[0], x[-1], 97)
        ref = CubicSpline(x, y, bc_type="natural")(xq)
        assert np.allclose(natural_cubic(x, y, xq), ref, atol=1e-12)

    def test_reproduces_knots(self, rng):
        x = np.arange(8.0)
        y = rng.standard_normal(8)
        assert np.allclose(natural_cubic(x, y, x), y, atol=1e-13)

    def test_linear_data_is_exact(self):
        # Linear data has zero second derivative, so the natural spline is the line.
        x = np.array([-20.0, -9, -3, 4, 11, 25])
        y = 0.3 * x - 2 + 1j * (1 - 0.1 * x)
        xq = np.array([-15.0, 0.5, 7, 20])
        assert np.allclose(natural_cubic(x, y, xq), 0.3 * xq - 2 + 1j * (1 - 0.1 * xq))

    def test_two_knots_is_line(self):
        assert natural_cubic([0, 2], [1.0, 3.0], [1.0])[0] == pytest.approx(2.0)

    def test_clamped_extrapolation(self):
        x = np.array([0.0, 1, 2, 3])
        y = np.array([1.0, 4, 2, 5])
        out = natural_cubic(x, y, [-2, -0.5, 3.5, 9])
        assert list(out) == [1.0, 1.0, 5.0, 5.0]

    def test_spline_extrapolation_matches_scipy(self):
        x = np.array([0.0, 1, 2, 3])
        y = np.array([1.0, 4, 2, 5])
        xq = np.array([-1.0, 4.0])
        ref = CubicSpline(x, y, bc_type="natural", extrapolate=True)(xq)
        assert np.allclose(natural_cubic(x, y, xq, extrapolate="spline"), ref)

    @pytest.mark.parametrize("x", [[0.0], [0.0, 0.0, 1.0], [2.0, 1.0]])
    def test_rejects_bad_knots(self, x):
        with pytest.raises(ValueError):
            natural_cubic(x, np.zeros(len(x)), [0.5])

    def test_rejects_unknown_mode(self):
        with pytest.raises(ValueError):
            natural_cubic([0, 1], [0, 1], [2], extrapolate="wrap")

    @settings(max_examples=40)
    @given(st.integers(3, 20), st.integers(0, 2 ** 31))
    def test_property_against_scipy(self, n, seed):
        r = np.random.default_rng(seed)
        x = np.cumsum(r.uniform(0.2, 3.0, n))
        y = r.standard_normal(n)
        xq = r.uniform(x[0], x[-1], 30)
        ref = CubicSpline(x, y, bc_type="natural")(xq)
        assert np.allclose(natural_cubic(x, y, xq), ref, atol=1e-9)
