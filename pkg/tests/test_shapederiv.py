import math

import numpy as np
import pytest

from clampedplate.errors import SpectralGapError
from clampedplate.shapederiv import (
    MIN_SPECTRAL_GAP,
    VectorFieldSpec,
    G_derivative_check,
    boundary_constancy_scan,
    eigenvalue_derivative_check,
    parse_field,
    spectral_gap,
    translation_check,
    volume_derivative,
)

FIELDS = ["dilation", "translation", "translation:0,1", "bump:0.7,0.8,1", "bump:2.5,0.5,0.6"]


class TestVectorFields:
    """Parsing and evaluation of deformation fields."""

    def test_parse_dilation(self):
        v = parse_field("dilation")
        assert v.is_origin_dilation
        vx, vy = v(np.array([1.0]), np.array([2.0]))
        assert (vx[0], vy[0]) == (1.0, 2.0)

    def test_off_centre_dilation(self):
        v = parse_field("dilation:0.5,0")
        assert not v.is_origin_dilation
        assert v.centre == (0.5, 0.0)

    def test_default_translation_off_axis(self):
        v = parse_field("translation")
        assert math.hypot(*v.params) == pytest.approx(1.0)
        assert 0 < v.params[1] < v.params[0]

    def test_bump_support(self):
        v = parse_field("bump:0,0.5,2")
        ang = np.array([0.0, 0.25, 0.6, math.pi])
        vx, vy = v(np.cos(ang), np.sin(ang))
        speed = np.hypot(vx, vy)
        assert speed[0] == pytest.approx(2.0)
        assert speed[1] == pytest.approx(2.0 * math.cos(math.pi / 4) ** 2)
        assert speed[2] == 0.0 and speed[3] == 0.0

    @pytest.mark.parametrize("text", ["spin", "translation:1", "bump:0,4,1", "bump:0,1", "dilation:1", "bump:a,b,c"])
    def test_rejects_bad_specs(self, text):
        with pytest.raises(ValueError):
            parse_field(text)

    def test_label_round_trip(self):
        v = VectorFieldSpec("normal_bump", (0.7, 0.8, 1.0))
        assert parse_field(v.label().replace("normal_bump", "bump")) == v


class TestVolume:
    """First variation of the area."""

    def test_dilation_doubles_area(self, disk64):
        vd = volume_derivative(disk64, parse_field("dilation"))
        assert vd.exact == pytest.approx(2 * math.pi, rel=1e-3)
        assert vd.finite_difference == pytest.approx(2 * disk64.area, rel=0.02)

    def test_translation_zero(self, disk64):
        vd = volume_derivative(disk64, parse_field("translation"))
        assert abs(vd.exact) < 1e-10

    def test_bump(self, disk64):
        vd = volume_derivative(disk64, parse_field("bump:0.7,0.8,1"))
        # int_{-w}^{w} cos^2(pi s / 2w) ds = w
        assert vd.exact == pytest.approx(0.8, rel=1e-2)
        assert vd.discrepancy / vd.exact < 0.05


class TestEigenvalueDerivative:
    """Simple-eigenvalue formula against finite differences."""

    def test_dilation_scaling_law(self, disk64, disk64_pair):
        rep = eigenvalue_derivative_check(disk64, parse_field("dilation"), pair=disk64_pair)
        assert rep.method == "rescale"
        assert rep.fd_richardson == pytest.approx(-4 * disk64_pair.eigenvalue, rel=1e-7)
        assert rep.relative_discrepancy < 0.01

    def test_bump_agrees(self, disk64, disk64_pair):
        rep = eigenvalue_derivative_check(disk64, parse_field("bump:0.7,0.8,1"), pair=disk64_pair)
        assert rep.method == "remask"
        assert rep.formula_value < 0
        assert rep.relative_discrepancy < 0.10

    def test_small_gap_refused(self, annulus64):
        assert spectral_gap(annulus64) < MIN_SPECTRAL_GAP
        with pytest.raises(SpectralGapError):
            eigenvalue_derivative_check(annulus64, parse_field("dilation"))

    def test_translation_invariance(self, disk64):
        rep = translation_check(disk64)
        assert rep.passed
        assert len(rep.offsets) == 9

    def test_translation_check_needs_translation(self, disk64):
        with pytest.raises(ValueError):
            translation_check(disk64, parse_field("dilation"))


class TestGDerivative:
    """The scale-free functional is stationary on the disk."""

    @pytest.mark.parametrize("text", FIELDS)
    def test_disk_stationary(self, disk64, disk64_pair, text):
        rep = G_derivative_check(disk64, parse_field(text), pair=disk64_pair, assert_zero=True)
        assert rep.passed
        assert rep.tolerance == pytest.approx(20 * disk64.h)

    def test_reports_without_assertion(self, square48, square48_pair):
        rep = G_derivative_check(square48, parse_field("dilation"), pair=square48_pair)
        assert rep.passed is None

    def test_constancy_scan(self, disk128_pair, square48_pair):
        assert boundary_constancy_scan(disk128_pair).max_rel_dev < 0.05
        assert boundary_constancy_scan(square48_pair).max_rel_dev > 0.5
