import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clampedplate import ballmode as bm
from clampedplate.errors import ConsistencyError

TABLE = {4: 0.6056, 5: 0.5643, 6: 0.5308, 7: 0.5028, 8: 0.4790, 9: 0.4583}


class TestGeometry:
    """Unit-ball volume and sphere area."""

    @pytest.mark.parametrize("d, vol", [(1, 2.0), (2, math.pi), (3, 4 * math.pi / 3), (4, math.pi**2 / 2)])
    def test_unit_ball_volume(self, d, vol):
        assert bm.unit_ball_volume(d) == pytest.approx(vol, rel=1e-14)

    def test_sphere_area_is_d_times_volume(self):
        for d in range(2, 13):
            assert bm.sphere_area(d) == pytest.approx(d * bm.unit_ball_volume(d), rel=1e-15)


class TestBallMode:
    """The closed-form ball mode satisfies its boundary conditions."""

    @pytest.mark.parametrize("d", range(2, 13))
    def test_clamped_boundary(self, d):
        m = bm.make_ball_mode(d, 1.0)
        scale = abs(bm.eval_u(m, 0.0))
        assert abs(bm.eval_u(m, m.R)) <= 1e-12 * scale
        assert abs(bm.eval_du(m, m.R)) <= 1e-11 * scale / m.R

    @pytest.mark.parametrize("d", range(2, 10))
    def test_boundary_laplacian_is_alpha(self, d):
        m = bm.make_ball_mode(d, 1.0)
        assert abs(abs(bm.eval_laplacian_u(m, m.R)) / bm.boundary_alpha(m) - 1.0) <= 1e-10

    @pytest.mark.parametrize("d", [2, 3, 5, 8])
    def test_unit_l2_norm(self, d):
        m = bm.make_ball_mode(d, 1.7)
        assert bm.l2_norm_sq(m) == pytest.approx(1.0, rel=1e-9)

    @pytest.mark.parametrize("d", [2, 4, 7])
    def test_bilaplacian_eigen_equation(self, d):
        """Delta^2 u = Gamma u, from finite differences of the closed-form Laplacian."""
        m = bm.make_ball_mode(d, 1.0)
        r = np.linspace(0.2, 0.9, 8) * m.R
        eps = 1e-4 * m.R
        lap = lambda s: bm.eval_laplacian_u(m, s)  # noqa: E731
        radial = (lap(r + eps) - 2 * lap(r) + lap(r - eps)) / eps**2 + (d - 1) / r * (
            lap(r + eps) - lap(r - eps)
        ) / (2 * eps)
        np.testing.assert_allclose(radial, m.eigenvalue * bm.eval_u(m, r), rtol=1e-5)

    def test_smooth_at_origin(self):
        m = bm.make_ball_mode(3, 1.0)
        r = np.array([0.0, 1e-9, 1e-6, 1e-4, 1e-3, 2e-3])
        u = bm.eval_u(m, r)
        assert np.all(np.isfinite(u))
        assert np.all(np.abs(np.diff(u)) < 1e-4 * abs(u[0]))

    def test_normal_derivative_of_laplacian_matches_fd(self):
        m = bm.make_ball_mode(4, 1.0)
        eps = 1e-5 * m.R
        fd = (bm.eval_laplacian_u(m, m.R) - bm.eval_laplacian_u(m, m.R - eps)) / eps
        assert bm.eval_normal_derivative_of_laplacian(m) == pytest.approx(fd, rel=1e-4)

    def test_rejects_bad_volume(self):
        with pytest.raises(ValueError):
            bm.make_ball_mode(2, 0.0)

    @settings(max_examples=25, deadline=None)
    @given(d=st.integers(2, 9), volume=st.floats(0.05, 20.0))
    def test_scaling_law(self, d, volume):
        """Gamma scales like volume^(-4/d); the mean like volume^(1/2)."""
        m1, mv = bm.make_ball_mode(d, 1.0), bm.make_ball_mode(d, volume)
        assert mv.eigenvalue == pytest.approx(m1.eigenvalue * volume ** (-4.0 / d), rel=1e-12)
        assert bm.mean_uB(mv) == pytest.approx(bm.mean_uB(m1) * math.sqrt(volume), rel=1e-9)


class TestMean:
    """The integral of the ball mode."""

    @pytest.mark.parametrize("d, ref", sorted(TABLE.items()))
    def test_reference_values(self, d, ref):
        mean = abs(bm.mean_uB(bm.make_ball_mode(d, 1.0)))
        assert abs(mean - ref) <= 5e-4
        assert abs(mean**2 - ref**2) <= 1e-3

    def test_mean_is_negative_for_formula_sign(self):
        """J_nu(gamma) < 0 makes the closed-form mode negative on average."""
        for d in range(2, 13):
            assert bm.mean_uB(bm.make_ball_mode(d, 1.0)) < 0

    @pytest.mark.parametrize("d", range(2, 13))
    def test_closed_form_matches_quadrature(self, d):
        forms = bm.mean_uB_forms(bm.make_ball_mode(d, 1.0))
        assert forms.discrepancy <= 1e-8

    @pytest.mark.parametrize("d", [3, 4, 6, 9])
    def test_extra_radius_power_disagrees(self, d):
        """A variant carrying R^{-(d-2)} is ruled out by quadrature when R != 1."""
        forms = bm.mean_uB_forms(bm.make_ball_mode(d, 1.0))
        assert forms.scaled_discrepancy > 1e-2

    def test_mean_bound(self):
        """|int u_B| <= sqrt(4|B|/d) in every dimension."""
        for d in range(2, 13):
            m = bm.make_ball_mode(d, 2.0)
            assert abs(bm.mean_uB(m)) <= math.sqrt(4 * m.volume / d)

    def test_inconsistent_forms_raise(self, monkeypatch):
        m = bm.make_ball_mode(2, 1.0)
        real = bm.mean_uB_forms(m)
        monkeypatch.setattr(
            bm, "mean_uB_forms",
            lambda mode: bm.MeanForms(real.closed_form + 1e-3, real.closed_form_scaled, real.quadrature),
        )
        with pytest.raises(ConsistencyError):
            bm.mean_uB(m)
