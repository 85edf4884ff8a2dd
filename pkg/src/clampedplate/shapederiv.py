"""Numerical checks of shape-derivative formulas on grid domains.

Boundary integrals are ring quadratures: each ring node contributes its
arc-length weight times the integrand at its boundary foot point, with the
Laplacian trace taken from the local cubic fits of :mod:`fdsolver`.
Finite differences use re-masked perturbed domains, except for dilations
about the origin, where rescaling ``h`` on the same mask is exact.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from .errors import SpectralGapError
from .fdsolver import (
    BoundaryFit,
    EigenPair,
    GridDomain,
    boundary_fit,
    lowest_eigenvalues,
    principal_eigenpair,
)
from .reduction import ComponentStats, boundary_alpha, component_stats

__all__ = [
    "VectorFieldSpec",
    "VolumeDerivative",
    "EigenvalueDerivativeReport",
    "TranslationReport",
    "GDerivativeReport",
    "parse_field",
    "volume_derivative",
    "eigenvalue_derivative_check",
    "translation_check",
    "G_derivative_check",
    "boundary_constancy_scan",
    "spectral_gap",
]

# Relative gap (Gamma_2 - Gamma_1)/Gamma_1 below which the principal
# eigenvalue is treated as multiple.
MIN_SPECTRAL_GAP = 0.05
# Step for dilation differences done by rescaling h.
RESCALE_STEP = 1e-3


@dataclass(frozen=True)
class VectorFieldSpec:
    """Deformation field ``V``.

    ``dilation``: ``V(x) = x - c``, params ``(cx, cy)`` (default origin).
    ``translation``: constant, params ``(vx, vy)``.
    ``normal_bump``: ``a phi(theta - theta0) (x - c)`` with
    ``phi(s) = cos^2(pi s / (2w))`` for ``|s| < w``; params
    ``(theta0, w, a[, cx, cy])``. It is normal on circles about ``c`` and
    supported on an arc.
    """

    kind: str
    params: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in ("dilation", "translation", "normal_bump"):
            raise ValueError(f"unknown vector field kind {self.kind!r}")
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if self.kind == "translation" and len(self.params) != 2:
            raise ValueError("translation needs (vx, vy)")
        if self.kind == "normal_bump":
            if len(self.params) not in (3, 5):
                raise ValueError("normal_bump needs (theta0, width, amplitude[, cx, cy])")
            if not 0 < self.params[1] <= math.pi:
                raise ValueError("bump width must lie in (0, pi]")
        if self.kind == "dilation" and len(self.params) not in (0, 2):
            raise ValueError("dilation takes no parameters or a centre (cx, cy)")

    @property
    def centre(self) -> tuple[float, float]:
        if self.kind == "dilation" and self.params:
            return self.params[0], self.params[1]
        if self.kind == "normal_bump" and len(self.params) == 5:
            return self.params[3], self.params[4]
        return 0.0, 0.0

    @property
    def is_origin_dilation(self) -> bool:
        return self.kind == "dilation" and self.centre == (0.0, 0.0)

    def __call__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.kind == "translation":
            return np.full_like(x, self.params[0]), np.full_like(y, self.params[1])
        cx, cy = self.centre
        dx, dy = x - cx, y - cy
        if self.kind == "dilation":
            return dx, dy
        theta0, width, amp = self.params[:3]
        s = np.angle(np.exp(1j * (np.arctan2(dy, dx) - theta0)))
        phi = np.where(np.abs(s) < width, np.cos(0.5 * math.pi * s / width) ** 2, 0.0)
        return amp * phi * dx, amp * phi * dy

    def label(self) -> str:
        if not self.params:
            return self.kind
        return f"{self.kind}:" + ",".join(f"{p:g}" for p in self.params)


def parse_field(text: str) -> VectorFieldSpec:
    """Parse ``dilation``, ``translation[:vx,vy]`` or ``bump:theta,w,a``."""
    name, _, rest = text.partition(":")
    params = tuple(float(p) for p in rest.split(",")) if rest else ()
    if name == "bump":
        name = "normal_bump"
    if name == "translation" and not params:
        # a direction off the lattice axes and diagonals
        params = (math.cos(0.3), math.sin(0.3))
    return VectorFieldSpec(name, params)


def _normal_component(fit: BoundaryFit, V: VectorFieldSpec) -> np.ndarray:
    vx, vy = V(fit.foot[:, 0], fit.foot[:, 1])
    return vx * fit.normal[:, 0] + vy * fit.normal[:, 1]


def _default_delta(domain: GridDomain, delta: float | None) -> float:
    return 4.0 * domain.h if delta is None else delta


@dataclass(frozen=True)
class VolumeDerivative:
    """Boundary quadrature of ``V.n`` against a central difference of the
    masked area."""

    exact: float
    finite_difference: float
    delta: float

    @property
    def discrepancy(self) -> float:
        return abs(self.exact - self.finite_difference)

    def to_dict(self) -> dict:
        return {**asdict(self), "discrepancy": self.discrepancy}


def volume_derivative(domain: GridDomain, V: VectorFieldSpec, delta: float | None = None) -> VolumeDerivative:
    """First variation of the area along ``V``, two ways."""
    delta = _default_delta(domain, delta)
    fit = boundary_fit_geometry(domain)
    exact = float((fit.weight * _normal_component(fit, V)).sum())
    plus = domain.perturbed(V, delta).area
    minus = domain.perturbed(V, -delta).area
    return VolumeDerivative(exact, (plus - minus) / (2.0 * delta), delta)


def boundary_fit_geometry(domain: GridDomain) -> BoundaryFit:
    """Ring geometry only (no field): feet, normals, weights, components."""
    n = len(domain.ring)
    empty = np.zeros(n)
    return BoundaryFit(
        foot=domain.ring_foot, normal=domain.ring_normals, weight=domain.ring_weights,
        component=domain.ring_components, value=empty, dn_value=empty,
        laplacian=empty, dn_laplacian=empty, radius=0.0,
    )


def spectral_gap(domain: GridDomain) -> float:
    """Relative gap ``(Gamma_2 - Gamma_1)/Gamma_1`` of the grid operator."""
    lam = lowest_eigenvalues(domain, 2)
    return float((lam[1] - lam[0]) / lam[0])


def _eigenvalue(domain: GridDomain) -> float:
    return principal_eigenpair(domain).eigenvalue


@dataclass(frozen=True)
class EigenvalueDerivativeReport:
    """``-int (Delta u)^2 V.n`` against finite differences of the eigenvalue.

    ``fd_value`` is the central difference at ``delta``; ``fd_richardson``
    combines it with the one at ``delta/2``. ``method`` is ``rescale`` when
    the perturbed eigenvalues come from rescaling ``h`` (exact for dilations
    about the origin) and ``remask`` otherwise.
    """

    eigenvalue: float
    spectral_gap: float
    formula_value: float
    fd_value: float
    fd_richardson: float
    delta: float
    method: str
    relative_discrepancy: float

    def to_dict(self) -> dict:
        return asdict(self)


def _perturbed_eigenvalue(domain: GridDomain, V: VectorFieldSpec, t: float) -> float:
    if V.is_origin_dilation:
        # Gamma((1+t) Omega) on the same mask with spacing (1+t) h
        return _eigenvalue(domain.scaled(1.0 + t))
    return _eigenvalue(domain.perturbed(V, t))


def eigenvalue_derivative_check(
    domain: GridDomain,
    V: VectorFieldSpec,
    delta: float | None = None,
    pair: EigenPair | None = None,
    min_gap: float = MIN_SPECTRAL_GAP,
) -> EigenvalueDerivativeReport:
    """Compare the simple-eigenvalue derivative formula with finite differences.

    Raises
    ------
    SpectralGapError
        If the relative gap to the second eigenvalue is below ``min_gap``.
    """
    delta = _default_delta(domain, delta)
    gap = spectral_gap(domain)
    if gap < min_gap:
        raise SpectralGapError(f"relative spectral gap {gap:.3g} below {min_gap:g}")
    pair = principal_eigenpair(domain) if pair is None else pair
    g0 = pair.eigenvalue
    fit = boundary_fit(pair.mode)
    formula = float(-(fit.weight * fit.laplacian**2 * _normal_component(fit, V)).sum())

    def central(step):
        up = _perturbed_eigenvalue(domain, V, step)
        down = _perturbed_eigenvalue(domain, V, -step)
        return (up - down) / (2.0 * step)

    if V.is_origin_dilation:
        # rescaling is exact, so only the Taylor error of the difference matters
        delta = min(delta, RESCALE_STEP)
    fd = central(delta)
    fd_half = central(0.5 * delta)
    rich = (4.0 * fd_half - fd) / 3.0
    scale = max(abs(fd), abs(formula), 1e-300)
    return EigenvalueDerivativeReport(
        eigenvalue=g0, spectral_gap=gap, formula_value=formula, fd_value=fd,
        fd_richardson=rich, delta=delta,
        method="rescale" if V.is_origin_dilation else "remask",
        relative_discrepancy=abs(formula - fd) / scale,
    )


@dataclass(frozen=True)
class TranslationReport:
    """Slope of the eigenvalue along a translation, from a least-squares line
    through re-masked solves, with its standard error as the noise level.

    Passes when ``|slope| <= 3 * stderr`` (plus a rounding floor).
    """

    eigenvalue: float
    slope: float
    stderr: float
    offsets: list[float]
    eigenvalues: list[float]
    passed: bool

    def to_dict(self) -> dict:
        return asdict(self)


def translation_check(domain: GridDomain, V: VectorFieldSpec | None = None,
                      delta: float | None = None, samples: int = 9) -> TranslationReport:
    """Eigenvalue derivative along a translation, which must vanish."""
    V = parse_field("translation") if V is None else V
    if V.kind != "translation":
        raise ValueError("translation_check needs a translation field")
    delta = _default_delta(domain, delta)
    offsets = np.linspace(-delta, delta, samples)
    vals = np.array([_eigenvalue(domain.perturbed(V, t)) if t else _eigenvalue(domain) for t in offsets])
    fit = stats.linregress(offsets, vals)
    floor = 1e-9 * abs(vals.mean()) / delta
    passed = abs(fit.slope) <= 3.0 * fit.stderr + floor
    return TranslationReport(
        eigenvalue=float(vals[samples // 2]), slope=float(fit.slope), stderr=float(fit.stderr),
        offsets=offsets.tolist(), eigenvalues=vals.tolist(), passed=bool(passed),
    )


@dataclass(frozen=True)
class GDerivativeReport:
    """Derivative of the scale-free functional ``|Omega|^{4/d} Gamma``.

    ``normalized`` divides by ``|Omega|^{4/d} int alpha^2 |V.n|``; it vanishes
    for every ``V`` exactly when ``(Delta u)^2 = alpha^2`` on the boundary.
    """

    value: float
    normalized: float
    tolerance: float
    passed: bool | None

    def to_dict(self) -> dict:
        return asdict(self)


def G_derivative_check(
    domain: GridDomain,
    V: VectorFieldSpec,
    pair: EigenPair | None = None,
    d: int = 2,
    tol: float | None = None,
    assert_zero: bool = False,
) -> GDerivativeReport:
    """Evaluate ``[int alpha^2 V.n - int (Delta u)^2 V.n] |Omega|^{4/d}``.

    ``passed`` is only set when ``assert_zero`` is requested (critical
    shapes); otherwise the value is reported.
    """
    tol = 20.0 * domain.h if tol is None else tol
    pair = principal_eigenpair(domain) if pair is None else pair
    fit = boundary_fit(pair.mode)
    vn = _normal_component(fit, V)
    alpha2 = boundary_alpha(pair.eigenvalue, domain.area, d) ** 2
    scale = domain.area ** (4.0 / d)
    value = float(((alpha2 - fit.laplacian**2) * vn * fit.weight).sum()) * scale
    norm = float((alpha2 * np.abs(vn) * fit.weight).sum()) * scale
    normalized = value / norm if norm > 0 else 0.0
    passed = bool(abs(normalized) < tol) if assert_zero else None
    return GDerivativeReport(value, normalized, tol, passed)


@dataclass(frozen=True)
class ConstancyScan:
    """Per-component statistics of ``(Delta u)^2`` on the boundary."""

    components: list[ComponentStats] = field(default_factory=list)

    @property
    def max_rel_dev(self) -> float:
        return max(c.rel_dev for c in self.components)

    def to_dict(self) -> dict:
        return {"components": [asdict(c) for c in self.components], "max_rel_dev": self.max_rel_dev}


def boundary_constancy_scan(pair: EigenPair) -> ConstancyScan:
    """How far ``(Delta u)^2`` is from constant on each boundary component."""
    fit = boundary_fit(pair.mode)
    return ConstancyScan(component_stats(fit.laplacian**2, fit))
