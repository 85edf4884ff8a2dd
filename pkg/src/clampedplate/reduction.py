r"""Order reduction of the clamped-plate eigenproblem and the checks built on it.

Writing :math:`\Delta^2 - \mu = (\Delta - \sqrt\mu)(\Delta + \sqrt\mu)`, an
eigenfunction ``u`` yields a second-order problem for

.. math::  z = \Delta u/\sqrt\mu + u - g, \qquad \Delta z = \sqrt\mu\,(z + g),

where ``g`` is harmonic with the boundary values of :math:`\Delta u/\sqrt\mu`.
On the grid, ``g`` is the discrete harmonic field whose ring values are
:math:`\Delta_h u/\sqrt\mu + u`; the extra ``u`` (which is O(h^2) on the ring)
makes ``z`` vanish on the ring exactly, so that for a discrete eigenpair the
reduced equation holds to rounding at every node off the ring. The discrete
maximum principle then gives ``z < 0`` wherever ``g >= 0``.

Report objects carry their thresholds; ``passed`` is ``None`` when a check
only reports and asserts nothing.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .ballmode import BallMode, make_ball_mode, mean_uB
from .fdsolver import (
    EigenPair,
    GridDomain,
    ScalarField,
    boundary_fit,
    harmonic_extension,
    laplacian_of,
)

__all__ = [
    "ReductionData",
    "ComponentStats",
    "CriticalityReport",
    "OverdeterminedReport",
    "HypothesisMReport",
    "NodalVolumeReport",
    "ZeroTraceReport",
    "reduce",
    "variational_quotient",
    "dirichlet_energy",
    "energy",
    "boundary_alpha",
    "component_stats",
    "check_criticality",
    "check_overdetermined",
    "check_hypothesis_M",
    "check_nodal_volume",
    "check_zero_laplacian_trace",
]

# Nodes at this depth or deeper see no ring values through the composed stencil.
CLEAN_DEPTH = 3


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj


class _Report:
    def to_dict(self) -> dict:
        return _plain(asdict(self))


@dataclass(frozen=True, eq=False)
class ReductionData:
    """Reduced fields for one eigenpair.

    ``residual_pde`` is the relative residual of the reduced equation over
    the nodes at depth >= 3; for a discrete eigenpair it is rounding level,
    for a sampled analytic mode it is the stencil truncation error.
    ``residual_boundary`` is ``max |z|`` on the ring over ``max |z|``.
    """

    mu: float
    g: ScalarField
    z: ScalarField
    z_prime: ScalarField
    residual_pde: float
    residual_prime: float
    residual_boundary: float
    residual_quotient: float
    exact_g: bool

    @property
    def g_nonnegative(self) -> bool:
        return bool(self.g.values.min() >= 0)

    @property
    def z_negative(self) -> bool:
        return bool(self.z.values[self.z.domain.depth > 1].max() < 0)

    def summary(self) -> dict:
        return {
            "mu": self.mu,
            "exact_g": self.exact_g,
            "residual_pde": self.residual_pde,
            "residual_prime": self.residual_prime,
            "residual_boundary": self.residual_boundary,
            "residual_quotient": self.residual_quotient,
            "g_min": float(self.g.values.min()),
            "g_max": float(self.g.values.max()),
            "z_max_off_ring": float(self.z.values[self.z.domain.depth > 1].max()),
            "g_nonnegative": self.g_nonnegative,
            "z_negative": self.z_negative,
        }


def boundary_alpha(eigenvalue: float, area: float, d: int = 2) -> float:
    """:math:`\\sqrt{4\\Gamma/(d|\\Omega|)}`."""
    return math.sqrt(4.0 * eigenvalue / (d * area))


def _clean_norm(domain: GridDomain, values: np.ndarray) -> float:
    return float(np.linalg.norm(values[domain.depth >= CLEAN_DEPTH]))


def reduce(pair: EigenPair, exact_g: bool = False, d: int = 2) -> ReductionData:
    """Build ``g``, ``z`` and the sign-flipped variant ``z'`` from an eigenpair.

    Parameters
    ----------
    pair : EigenPair
        A grid eigenpair, or a sampled analytic mode with its eigenvalue.
    exact_g : bool
        Use the constant :math:`\\pm\\sqrt{4/(d|\\Omega|)}` (the value for a
        critical shape) instead of the harmonic extension. The sign follows
        the fitted boundary trace of :math:`\\Delta u`.
    """
    dom = pair.domain
    mu = float(pair.eigenvalue)
    root = math.sqrt(mu)
    u = pair.mode.values
    lap = laplacian_of(pair.mode).values
    ring = dom.ring
    if exact_g:
        trace = boundary_fit(pair.mode).laplacian
        sign = 1.0 if np.mean(trace) >= 0 else -1.0
        g = ScalarField(dom, np.full(dom.n_interior, sign * math.sqrt(4.0 / (d * dom.area))))
    else:
        g = harmonic_extension(dom, lap[ring] / root + u[ring])
    z = lap / root + u - g.values
    zp = lap / root - u - g.values
    lz = laplacian_of(ScalarField(dom, z)).values
    lzp = laplacian_of(ScalarField(dom, zp)).values
    res = lz - root * (z + g.values)
    res_p = -lzp - root * (zp + g.values)
    zscale = max(_clean_norm(dom, z), 1e-300)
    zpscale = max(_clean_norm(dom, zp), 1e-300)
    zmax = max(np.abs(z).max(), 1e-300)
    zf = ScalarField(dom, z)
    q = variational_quotient(zf, g, zf)
    return ReductionData(
        mu=mu,
        g=g,
        z=zf,
        z_prime=ScalarField(dom, zp),
        residual_pde=_clean_norm(dom, res) / zscale,
        residual_prime=_clean_norm(dom, res_p) / zpscale,
        residual_boundary=float(np.abs(z[ring]).max() / zmax),
        residual_quotient=abs(q * root - 1.0),
        exact_g=exact_g,
    )


def dirichlet_energy(z: ScalarField) -> float:
    """Forward-difference :math:`\\int|\\nabla_h z|^2` of the zero-extended field."""
    grid = z.to_grid()
    dx = np.diff(grid, axis=1)
    dy = np.diff(grid, axis=0)
    # h^2 area weight and 1/h^2 from the difference quotient cancel
    return float((dx**2).sum() + (dy**2).sum())


def variational_quotient(z: ScalarField, g: ScalarField, z_ref: ScalarField) -> float:
    """:math:`-[\\int z^2 + \\int g(2z - z_{ref})] / \\int|\\nabla z|^2`.

    At ``z = z_ref = z_u`` this is :math:`1/\\sqrt\\mu`, and it is maximal
    there among fields vanishing on the ring.

    Raises
    ------
    ZeroDivisionError
        If ``z`` has zero Dirichlet energy.
    """
    den = dirichlet_energy(z)
    if den == 0.0:
        raise ZeroDivisionError("field has zero Dirichlet energy")
    h2 = z.domain.h ** 2
    num = (z.values**2).sum() + (g.values * (2.0 * z.values - z_ref.values)).sum()
    return float(-num * h2 / den)


def energy(z: ScalarField, g: ScalarField, mu: float) -> float:
    """Convex energy whose minimiser over fields vanishing on the ring is ``z_u``:
    :math:`\\int|\\nabla z|^2 + \\sqrt\\mu\\int z^2 + 2\\sqrt\\mu\\int g z`."""
    root = math.sqrt(mu)
    h2 = z.domain.h ** 2
    return float(
        dirichlet_energy(z)
        + root * h2 * (z.values**2).sum()
        + 2.0 * root * h2 * (g.values * z.values).sum()
    )


@dataclass(frozen=True)
class ComponentStats:
    """Statistics of a boundary quantity over one boundary component.

    ``rel_dev`` is the largest ``|value/reference - 1|``.
    """

    component: int
    nodes: int
    length: float
    mean: float
    std: float
    rel_dev: float


def component_stats(values: np.ndarray, fit_or_domain, reference: float | None = None) -> list[ComponentStats]:
    """Per-component mean, spread and largest relative deviation.

    The reference defaults to each component's arc-length-weighted mean.
    """
    comp = fit_or_domain.component if hasattr(fit_or_domain, "component") else fit_or_domain.ring_components
    weight = fit_or_domain.weight if hasattr(fit_or_domain, "weight") else fit_or_domain.ring_weights
    out = []
    for c in range(int(comp.max()) + 1):
        sel = comp == c
        v, w = values[sel], weight[sel]
        mean = float((v * w).sum() / w.sum())
        ref = mean if reference is None else reference
        rel = float(np.abs(v / ref - 1.0).max()) if ref != 0 else math.inf
        out.append(
            ComponentStats(
                component=c, nodes=int(sel.sum()), length=float(w.sum()),
                mean=mean, std=float(v.std()), rel_dev=rel,
            )
        )
    return out


@dataclass(frozen=True)
class CriticalityReport(_Report):
    """|Delta u| on the boundary against alpha."""

    alpha: float
    components: list[ComponentStats]
    max_rel_dev: float
    tolerance: float
    passed: bool


def check_criticality(pair: EigenPair, tol: float | None = None, d: int = 2) -> CriticalityReport:
    """Whether ``|Delta u|`` equals alpha on every boundary component.

    ``tol`` is relative to alpha and defaults to ``10 h``.
    """
    dom = pair.domain
    tol = 10.0 * dom.h if tol is None else tol
    alpha = boundary_alpha(pair.eigenvalue, dom.area, d)
    fit = boundary_fit(pair.mode)
    stats = component_stats(np.abs(fit.laplacian), fit, reference=alpha)
    worst = max(s.rel_dev for s in stats)
    return CriticalityReport(alpha, stats, worst, tol, bool(worst < tol))


@dataclass(frozen=True)
class OverdeterminedReport(_Report):
    """Constancy of the normal derivative of Delta u, and of that of z.

    When the trace of Delta u is constant, ``g`` is constant and
    ``dn z = dn(Delta u)/sqrt(mu)``; ``chain_rel_dev`` measures that link.
    """

    dn_laplacian: list[ComponentStats]
    dn_z: list[ComponentStats]
    chain_rel_dev: float
    tolerance: float
    constant: bool


def check_overdetermined(pair: EigenPair, tol: float | None = None) -> OverdeterminedReport:
    """Report how far ``dn Delta u`` is from constant on each component.

    ``constant`` is judged against ``tol`` (default ``10 h``, relative).
    """
    dom = pair.domain
    tol = 10.0 * dom.h if tol is None else tol
    fit = boundary_fit(pair.mode)
    red = reduce(pair)
    zfit = boundary_fit(red.z, skip_ring=True)
    dl = component_stats(fit.dn_laplacian, fit)
    dz = component_stats(zfit.dn_value, zfit)
    root = math.sqrt(pair.eigenvalue)
    chain = max(
        abs(a.mean / root / b.mean - 1.0) if b.mean != 0 else math.inf for a, b in zip(dl, dz)
    )
    worst = max(s.rel_dev for s in dl)
    return OverdeterminedReport(dl, dz, chain, tol, bool(worst < tol))


@dataclass(frozen=True)
class HypothesisMReport(_Report):
    """Mean of the grid mode against the mean of the volume-matched ball mode."""

    mean_u: float
    mean_uB: float
    holds: bool
    rel_gap: float
    mean_bound: float
    bound_holds: bool
    tolerance: float
    equality_within_tol: bool


def _matched_ball(pair: EigenPair, mode_B: BallMode | None, d: int) -> BallMode:
    return make_ball_mode(d, pair.domain.area) if mode_B is None else mode_B


def check_hypothesis_M(pair: EigenPair, mode_B: BallMode | None = None, d: int = 2,
                       tol: float | None = None) -> HypothesisMReport:
    """Compare ``|int u|`` with ``|int u_B|`` over the ball of equal area.

    Also reports the bound ``int u <= sqrt(4|Omega|/d)`` and whether the two
    means agree within ``tol`` (relative, default ``10 h``), the expected
    outcome when the domain is a disk.
    """
    dom = pair.domain
    tol = 10.0 * dom.h if tol is None else tol
    ball = _matched_ball(pair, mode_B, d)
    mu = abs(pair.mode.integral())
    mb = abs(mean_uB(ball))
    bound = math.sqrt(4.0 * dom.area / d)
    gap = mu / mb - 1.0
    return HypothesisMReport(
        mean_u=mu, mean_uB=mb, holds=bool(mu <= mb), rel_gap=gap,
        mean_bound=bound, bound_holds=bool(mu <= bound),
        tolerance=tol, equality_within_tol=bool(abs(gap) <= tol),
    )


@dataclass(frozen=True)
class NodalVolumeReport(_Report):
    """Measure of the positivity set against the ball mean."""

    precondition_ok: bool
    positive_area: float
    sqrt_positive_area: float
    mean_uB: float
    threshold: float
    exceeds: bool
    all_positive: bool


def check_nodal_volume(pair: EigenPair, mode_B: BallMode | None = None, d: int = 2) -> NodalVolumeReport:
    """``sqrt|Omega_+|`` against ``int u_B`` and the threshold ``(int u_B)^2``.

    The precondition (positive mean) is reported rather than raised.
    """
    dom = pair.domain
    ball = _matched_ball(pair, mode_B, d)
    u = pair.mode.values
    pos = int((u > 0).sum())
    area = pos * dom.h**2
    mb = abs(mean_uB(ball))
    return NodalVolumeReport(
        precondition_ok=bool(u.sum() > 0),
        positive_area=area,
        sqrt_positive_area=math.sqrt(area),
        mean_uB=mb,
        threshold=mb**2,
        exceeds=bool(math.sqrt(area) > mb),
        all_positive=bool(pos == dom.n_interior),
    )


@dataclass(frozen=True)
class ZeroTraceReport(_Report):
    """Mean boundary |Delta u| relative to alpha; an eigenfunction cannot have
    a vanishing trace."""

    mean_abs_trace: float
    alpha: float
    ratio: float
    threshold: float
    passed: bool


def check_zero_laplacian_trace(pair: EigenPair, threshold: float = 0.1, d: int = 2) -> ZeroTraceReport:
    """Assert the boundary trace of ``Delta u`` stays away from zero.

    Raises
    ------
    ValueError
        If the mode is identically zero (not an eigenfunction).
    """
    if not np.any(pair.mode.values):
        raise ValueError("zero field is not an eigenfunction")
    dom = pair.domain
    fit = boundary_fit(pair.mode)
    mean_abs = float((np.abs(fit.laplacian) * fit.weight).sum() / fit.weight.sum())
    alpha = boundary_alpha(pair.eigenvalue, dom.area, d)
    ratio = mean_abs / alpha
    return ZeroTraceReport(mean_abs, alpha, ratio, threshold, bool(ratio > threshold))
