"""Acceptance suite: one test, and one printed PASS/FAIL line, per criterion.

Run alone with ``pytest tests/test_acceptance.py -v``; the lines are collected
in the "acceptance criteria" section of the terminal summary.
"""

import math
import time

import numpy as np
import pytest

from clampedplate import ballmode as bm
from clampedplate.fdsolver import (
    ScalarField,
    make_domain,
    principal_eigenpair,
    sample_ball_pair,
    sample_field,
)
from clampedplate.rearrange import distribution_function, polya_szego_check, schwarz, talenti_compare
from clampedplate.reduction import (
    check_criticality,
    check_hypothesis_M,
    reduce,
    variational_quotient,
)
from clampedplate.shapederiv import G_derivative_check, eigenvalue_derivative_check, parse_field, translation_check
from clampedplate.specialfn import gamma_nu

TABLE = {4: 0.6056, 5: 0.5643, 6: 0.5308, 7: 0.5028, 8: 0.4790, 9: 0.4583}
GAMMA0_4 = gamma_nu(2).gamma ** 4
RESOLUTIONS = (64, 128, 256)


@pytest.fixture(scope="module")
def disk_runs():
    """Grid eigenpairs on the unit disk at h = 2/64, 2/128, 2/256, with timing."""
    start = time.perf_counter()
    pairs = {n: principal_eigenpair(make_domain("disk", [1.0], n)) for n in RESOLUTIONS}
    return pairs, time.perf_counter() - start


def random_negative(domain, rng):
    """Negative fields from near-radial (tight for the energy inequality) to rough."""
    x, y = domain.coords.T
    kind = rng.integers(3)
    if kind == 0:
        cx, cy = rng.uniform(-0.2, 0.2, 2)
        vals = np.maximum(1.0 - (x - cx) ** 2 - (y - cy) ** 2, 0.0) ** rng.uniform(1.0, 3.0)
    else:
        a, b, c = rng.uniform(0.5, 5.0, 3)
        vals = np.abs(np.sin(a * x + c) * np.cos(b * y))
        if kind == 2:
            vals = vals + 0.25 * rng.random(domain.n_interior)
    vals[domain.ring] = 0.0
    return ScalarField(domain, -vals)


class TestAcceptance:
    """The seven acceptance criteria."""

    def test_1_ball_table(self, acceptance):
        start = time.perf_counter()
        forms = {d: bm.mean_uB_forms(bm.make_ball_mode(d, 1.0)) for d in TABLE}
        elapsed = time.perf_counter() - start
        mean_err = max(abs(abs(f.closed_form) - TABLE[d]) for d, f in forms.items())
        sq_err = max(abs(f.closed_form**2 - TABLE[d] ** 2) for d, f in forms.items())
        quad_err = max(f.discrepancy for f in forms.values())
        variant_err = min(f.scaled_discrepancy for f in forms.values())
        ok = mean_err <= 5e-4 and sq_err <= 1e-3 and quad_err <= 1e-8 and elapsed < 1.0 and variant_err > 1e-2
        acceptance(
            1, "ball mean table d=4..9", ok,
            f"max mean err {mean_err:.2e} (tol 5e-4), max square err {sq_err:.2e} (tol 1e-3), "
            f"closed form vs quadrature {quad_err:.1e} (tol 1e-8), runtime {elapsed:.2f} s (limit 1 s), "
            f"R^(d-2) variant off by >= {variant_err:.2f} so rejected",
        )
        assert ok

    def test_2_disk_eigenvalue(self, acceptance, disk_runs):
        pairs, elapsed = disk_runs
        g = [pairs[n].eigenvalue for n in RESOLUTIONS]
        order = math.log2((g[1] - g[0]) / (g[2] - g[1]))
        extrap = g[2] + (g[2] - g[1]) / (2.0**order - 1.0)
        rel = abs(extrap / GAMMA0_4 - 1.0)
        ok = rel <= 0.01 and elapsed < 60.0
        acceptance(
            2, "disk eigenvalue", ok,
            f"Gamma_h = {g[0]:.4f}, {g[1]:.4f}, {g[2]:.4f}; observed order {order:.2f}; "
            f"extrapolated {extrap:.4f} vs gamma0^4 = {GAMMA0_4:.4f}, rel err {rel:.2e} (tol 1e-2); "
            f"runtime {elapsed:.1f} s (limit 60 s)",
        )
        assert ok

    def test_3_ball_criticality(self, acceptance, disk_runs):
        closed = max(
            abs(abs(bm.eval_laplacian_u(m, m.R)) / bm.boundary_alpha(m) - 1.0)
            for m in (bm.make_ball_mode(d, 1.0) for d in range(2, 10))
        )
        pair = disk_runs[0][128]
        rep = check_criticality(pair)
        ok = closed <= 1e-10 and rep.passed
        acceptance(
            3, "ball criticality", ok,
            f"closed form max | |Lap u_B(R)|/alpha - 1 | = {closed:.1e} over d=2..9 (tol 1e-10); "
            f"grid trace on disk h=2/128 max rel dev {rep.max_rel_dev:.3e} (tol 10h = {rep.tolerance:.3f})",
        )
        assert ok

    def test_4_order_reduction(self, acceptance, disk_runs):
        residuals = [reduce(sample_ball_pair(make_domain("disk", [1.0], n), 1.0)).residual_pde for n in RESOLUTIONS]
        orders = np.log2(np.array(residuals[:-1]) / np.array(residuals[1:]))
        pair = disk_runs[0][256]
        red = reduce(pair)
        g_pos = red.g.values >= 0
        off_ring = pair.domain.depth > 1
        z_max = float(red.z.values[g_pos & off_ring].max())
        q0 = variational_quotient(red.z, red.g, red.z)
        q_gap = abs(q0 - 1.0 / math.sqrt(GAMMA0_4))
        rng = np.random.default_rng(4)
        dom = pair.domain
        worst = -np.inf
        for _ in range(50):
            delta = rng.standard_normal(dom.n_interior) * 10.0 ** rng.uniform(-8, 0) * np.abs(red.z.values).max()
            delta[dom.ring] = 0.0
            q = variational_quotient(red.z.like(red.z.values + delta), red.g, red.z)
            worst = max(worst, q - q0)
        ok = bool(np.all(orders >= 1.0)) and z_max < 0 and q_gap <= 1e-2 and worst <= 1e-10
        acceptance(
            4, "order reduction", ok,
            f"truncation residuals {', '.join(f'{r:.2e}' for r in residuals)} give orders "
            f"{', '.join(f'{o:.2f}' for o in orders)} (need >= 1); max z where g >= 0 off the ring {z_max:.3e} (< 0); "
            f"quotient {q0:.6f} vs 1/sqrt(gamma0^4) {1 / math.sqrt(GAMMA0_4):.6f}, gap {q_gap:.1e} (tol 1e-2); "
            f"largest excess over 50 perturbations {worst:.1e} (tol 1e-10)",
        )
        assert ok

    def test_5_rearrangement(self, acceptance):
        dom = make_domain("disk", [1.0], 64)
        rng = np.random.default_rng(5)
        equi_err = 0.0
        lp_err = 0.0
        ps_worst = np.inf
        ps_fail = 0
        for _ in range(100):
            z = random_negative(dom, rng)
            f = z.like(-z.values)
            p = schwarz(f)
            for t in np.quantile(f.values, [0.05, 0.3, 0.6, 0.9]):
                equi_err = max(equi_err, abs((p.values > t).sum() * p.cell - distribution_function(f, t)))
            for q in (1, 2):
                direct = ((np.abs(f.values) ** q).sum() * dom.h**2) ** (1 / q)
                lp_err = max(lp_err, abs(p.lp_norm(q) / direct - 1.0))
            rep = polya_szego_check(z)
            ps_fail += not rep.passed
            ps_worst = min(ps_worst, rep.lhs / rep.rhs - 1.0)
        sq = make_domain("square", [1.0], 64)
        tal = [talenti_compare(sq, ScalarField(sq, rng.random(sq.n_interior))) for _ in range(20)]
        tal_gap = min(r.min_gap / r.max_u for r in tal)
        tal_tol = 10 * sq.h
        ok = equi_err == 0.0 and lp_err <= 1e-13 and ps_fail == 0 and tal_gap >= -tal_tol
        acceptance(
            5, "rearrangement", ok,
            f"equimeasurability error {equi_err:.1e} (exact); Lp drift {lp_err:.1e} (tol 1e-13); "
            f"Polya-Szego failures {ps_fail}/100, worst energy margin {ps_worst:+.3e} (tol -10h = {-10 * dom.h:.3f}); "
            f"Talenti min gap / max u {tal_gap:+.3e} over 20 sources (tol -10h = {-tal_tol:.4f})",
        )
        assert ok

    def test_6_dilation_anchor(self, acceptance, disk_runs):
        pair = disk_runs[0][128]
        dom = pair.domain
        rep = eigenvalue_derivative_check(dom, parse_field("dilation"), pair=pair)
        target = -4.0 * pair.eigenvalue
        both = abs(rep.formula_value - rep.fd_richardson) / abs(rep.fd_richardson)
        law = abs(rep.fd_richardson / target - 1.0)
        tr = translation_check(dom)
        specs = ["dilation", "translation", "translation:0,1", "bump:0.7,0.8,1", "bump:2.5,0.5,0.6"]
        g = [G_derivative_check(dom, parse_field(s), pair=pair, assert_zero=True) for s in specs]
        g_worst = max(abs(r.normalized) for r in g)
        ok = both <= 0.01 and law <= 1e-6 and tr.passed and all(r.passed for r in g)
        acceptance(
            6, "dilation anchor", ok,
            f"formula {rep.formula_value:.3f}, h-rescaling FD {rep.fd_richardson:.3f}, -4 Gamma {target:.3f}; "
            f"formula vs FD {both:.2e} (tol 1e-2), FD vs -4 Gamma {law:.1e}; translation slope {tr.slope:.2e} "
            f"vs noise 3*stderr {3 * tr.stderr:.2e}; worst |G'| normalised {g_worst:.3e} over 5 fields (tol 20h = {g[0].tolerance:.3f})",
        )
        assert ok

    def test_7_hypothesis_M_equality(self, acceptance, disk_runs):
        pair = disk_runs[0][128]
        rep = check_hypothesis_M(pair)
        ok = rep.equality_within_tol and rep.bound_holds
        acceptance(
            7, "mean hypothesis equality case", ok,
            f"grid mean {rep.mean_u:.5f} vs ball mean {rep.mean_uB:.5f}, rel gap {rep.rel_gap:+.3e} "
            f"(tol 10h = {rep.tolerance:.4f}); bound int u <= sqrt(4|Omega|/d) = {rep.mean_bound:.4f} holds: {rep.bound_holds}",
        )
        assert ok


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-v"]))
