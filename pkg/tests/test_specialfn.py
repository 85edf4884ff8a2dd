import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clampedplate.specialfn import (
    bessel_i,
    bessel_ie,
    bessel_j,
    bessel_j_zero,
    cross_product,
    find_bracketed_root,
    gamma_nu,
)

orders = st.sampled_from([0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0, 7.5])


class TestBesselJ:
    """J_nu against mpmath at 30 digits."""

    @settings(max_examples=200, deadline=None)
    @given(nu=orders, x=st.floats(min_value=0.0, max_value=60.0))
    def test_matches_mpmath(self, nu, x):
        ref = float(mpmath.besselj(nu, x))
        assert bessel_j(nu, x) == pytest.approx(ref, rel=1e-11, abs=1e-13)

    def test_array_shape_preserved(self):
        x = np.linspace(0.0, 10.0, 12).reshape(3, 4)
        out = bessel_j(1.5, x)
        assert out.shape == (3, 4)
        assert out[0, 0] == 0.0

    def test_origin_values(self):
        assert bessel_j(0.0, 0.0) == 1.0
        assert bessel_j(2.0, 0.0) == 0.0

    def test_half_integer_closed_form(self):
        x = np.linspace(0.1, 20.0, 50)
        ref = np.sqrt(2.0 / (math.pi * x)) * np.sin(x)
        np.testing.assert_allclose(bessel_j(0.5, x), ref, rtol=1e-12, atol=1e-15)

    def test_recurrence(self):
        """J_{nu-1} + J_{nu+1} = (2 nu / x) J_nu."""
        x = np.linspace(0.5, 30.0, 80)
        for nu in (1.0, 2.5, 4.0):
            lhs = bessel_j(nu - 1, x) + bessel_j(nu + 1, x)
            np.testing.assert_allclose(lhs, 2 * nu / x * bessel_j(nu, x), atol=1e-13)

    @pytest.mark.parametrize("nu, x", [(-1.0, 1.0), (1.0, -0.5), (0.0, float("nan")), (0.0, float("inf"))])
    def test_rejects_bad_input(self, nu, x):
        with pytest.raises(ValueError):
            bessel_j(nu, x)


class TestBesselI:
    """I_nu and its scaled form against mpmath."""

    @settings(max_examples=150, deadline=None)
    @given(nu=orders, x=st.floats(min_value=0.0, max_value=700.0))
    def test_scaled_matches_mpmath(self, nu, x):
        ref = float(mpmath.besseli(nu, x) * mpmath.exp(-x))
        assert bessel_ie(nu, x) == pytest.approx(ref, rel=1e-11, abs=1e-300)

    def test_asymptotic_branch_continuous(self):
        x = np.array([689.0, 689.999, 690.001, 900.0, 5000.0])
        ref = [float(mpmath.besseli(2.5, v) * mpmath.exp(-v)) for v in x]
        np.testing.assert_allclose(bessel_ie(2.5, x), ref, rtol=1e-12)

    def test_unscaled_overflow_reported(self):
        with pytest.raises(OverflowError):
            bessel_i(0.0, 800.0)

    def test_unscaled_matches_scaled(self):
        x = np.linspace(0.0, 50.0, 30)
        np.testing.assert_allclose(bessel_i(1.0, x), bessel_ie(1.0, x) * np.exp(x), rtol=1e-14)


class TestZeros:
    """Zeros of J_nu and of the cross product."""

    @pytest.mark.parametrize("nu", [0.0, 0.5, 1.0, 2.5, 4.0])
    @pytest.mark.parametrize("n", [1, 2, 5])
    def test_j_zero_matches_mpmath(self, nu, n):
        assert bessel_j_zero(nu, n) == pytest.approx(float(mpmath.besseljzero(nu, n)), rel=1e-13)

    def test_j_zero_index_checked(self):
        with pytest.raises(ValueError):
            bessel_j_zero(1.0, 0)

    def test_gamma0_reference(self):
        assert gamma_nu(2).gamma == pytest.approx(3.1962206165825413, rel=1e-13)

    @pytest.mark.parametrize("d", range(2, 13))
    def test_gamma_is_cross_product_zero(self, d):
        z = gamma_nu(d)
        assert z.j1 < z.gamma < z.j2
        nu = d / 2 - 1
        ref = mpmath.findroot(
            lambda r: mpmath.besselj(nu, r) * mpmath.besseli(nu + 1, r)
            + mpmath.besselj(nu + 1, r) * mpmath.besseli(nu, r),
            z.gamma,
        )
        assert z.gamma == pytest.approx(float(ref), rel=1e-12)
        assert abs(cross_product(nu, z.gamma)) < 1e-13

    @pytest.mark.parametrize("d", [1, 0, 2.5])
    def test_gamma_rejects_bad_dimension(self, d):
        with pytest.raises(ValueError):
            gamma_nu(d)

    def test_bisection_needs_sign_change(self):
        with pytest.raises(ValueError):
            find_bracketed_root(lambda x: x * x + 1.0, -1.0, 1.0)

    def test_bisection_finds_sqrt2(self):
        assert find_bracketed_root(lambda x: x * x - 2.0, 0.0, 2.0) == pytest.approx(math.sqrt(2), rel=1e-15)
