r"""Principal clamped-plate eigenmode of a ball in closed form.

With :math:`\nu = d/2 - 1`, :math:`k = \gamma_\nu / R` and :math:`|B|` the ball
volume, the :math:`L^2`-normalised principal eigenfunction is

.. math::

    u(r) = \frac{1}{\sqrt{d|B|}}
           \left[\frac{J_\nu(kr)}{J_\nu(\gamma_\nu)}
                 - \frac{I_\nu(kr)}{I_\nu(\gamma_\nu)}\right]
           \left(\frac{r}{R}\right)^{-\nu},

with eigenvalue :math:`k^4`. The radial factor :math:`r^{-\nu}J_\nu(kr)` solves
:math:`\Delta f = -k^2 f` in :math:`\mathbb{R}^d` and :math:`r^{-\nu}I_\nu(kr)`
solves :math:`\Delta f = k^2 f`, so Laplacians are available in closed form.

Note the sign: :math:`J_\nu(\gamma_\nu) < 0`, so the function above has a
negative mean. Everything here follows that formula; grid comparisons flip
the sign explicitly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import ConsistencyError
from .specialfn import bessel_i, bessel_j, gamma_nu

__all__ = [
    "BallMode",
    "MeanForms",
    "unit_ball_volume",
    "sphere_area",
    "make_ball_mode",
    "eval_u",
    "eval_du",
    "eval_laplacian_u",
    "boundary_alpha",
    "eval_normal_derivative_of_laplacian",
    "mean_uB",
    "mean_uB_forms",
    "l2_norm_sq",
    "radial_integral",
]

# Below this fraction of R the r^{-nu} factors are taken from their series.
NEAR_ORIGIN = 1e-3
MEAN_CONSISTENCY_TOL = 1e-6


def unit_ball_volume(d: int) -> float:
    """Volume :math:`\\omega_d` of the unit ball in :math:`\\mathbb{R}^d`."""
    return math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0)


def sphere_area(d: int) -> float:
    """Surface measure of the unit sphere :math:`|\\mathbb{S}^{d-1}| = d\\,\\omega_d`."""
    return d * unit_ball_volume(d)


@dataclass(frozen=True)
class BallMode:
    d: int
    R: float
    volume: float
    nu: float
    gamma: float
    k: float
    eigenvalue: float
    coefA: float
    coefB: float
    # gamma's bracketing zeros of J_nu, plus J_nu and I_nu at gamma
    j1: float
    j2: float
    j_at_gamma: float
    i_at_gamma: float

    @property
    def norm_factor(self) -> float:
        return 1.0 / math.sqrt(self.d * self.volume)


def make_ball_mode(d: int, volume: float) -> BallMode:
    """Closed-form principal mode of the ball of the given volume in dimension ``d``."""
    if volume <= 0:
        raise ValueError("volume must be positive")
    zero = gamma_nu(d)
    nu, g = zero.nu, zero.gamma
    R = (volume / unit_ball_volume(d)) ** (1.0 / d)
    jg = bessel_j(nu, g)
    ig = bessel_i(nu, g)
    root = math.sqrt(d * volume)
    return BallMode(
        d=d,
        R=R,
        volume=volume,
        nu=nu,
        gamma=g,
        k=g / R,
        eigenvalue=(g / R) ** 4,
        coefA=R**nu / (jg * root),
        coefB=-(R**nu) / (ig * root),
        j1=zero.j1,
        j2=zero.j2,
        j_at_gamma=jg,
        i_at_gamma=ig,
    )


def _reduced(nu: float, x: np.ndarray, modified: bool) -> np.ndarray:
    """:math:`J_\\nu(x) x^{-\\nu}` (or the I analogue), regular at the origin."""
    out = np.empty_like(x)
    tiny = x < 1e-12
    far = ~tiny
    if np.any(far):
        fn = bessel_i if modified else bessel_j
        out[far] = fn(nu, x[far]) * x[far] ** (-nu)
    if np.any(tiny):
        out[tiny] = 0.5**nu / math.gamma(nu + 1.0)
    return out


def _reduced_series(nu: float, x: np.ndarray, modified: bool, terms: int = 4) -> np.ndarray:
    sign = 1.0 if modified else -1.0
    q = (0.5 * x) ** 2
    term = np.full_like(x, 0.5**nu / math.gamma(nu + 1.0))
    total = term.copy()
    for j in range(1, terms):
        term = sign * term * q / (j * (j + nu))
        total += term
    return total


def _radial_pair(mode: BallMode, r, order_shift: int = 0):
    """Return (r array, J-part, I-part) with the ``(kr)^{-nu}`` factor applied."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0) or np.any(r > mode.R * (1 + 1e-12)):
        raise ValueError(f"radius must lie in [0, {mode.R}]")
    rr = np.atleast_1d(np.minimum(r, mode.R)).ravel()
    x = mode.k * rr
    nu = mode.nu + order_shift
    near = rr < NEAR_ORIGIN * mode.R
    jpart = np.empty_like(x)
    ipart = np.empty_like(x)
    if np.any(~near):
        jpart[~near] = _reduced(nu, x[~near], False)
        ipart[~near] = _reduced(nu, x[~near], True)
    if np.any(near):
        jpart[near] = _reduced_series(nu, x[near], False)
        ipart[near] = _reduced_series(nu, x[near], True)
    # (kr)^{-nu} J_{nu+s}(kr) = (kr)^s * [(kr)^{-(nu+s)} J_{nu+s}(kr)]
    if order_shift:
        jpart = jpart * x**order_shift
        ipart = ipart * x**order_shift
    return r, jpart, ipart


def _shape(r, values):
    return float(values[0]) if np.ndim(r) == 0 else values.reshape(np.shape(r))


def eval_u(mode: BallMode, r):
    """Mode value at radius ``r`` (scalar or array) in ``[0, R]``."""
    r, jp, ip = _radial_pair(mode, r)
    scale = mode.gamma**mode.nu * mode.norm_factor
    vals = scale * (jp / mode.j_at_gamma - ip / mode.i_at_gamma)
    return _shape(r, vals)


def eval_du(mode: BallMode, r):
    """Radial derivative :math:`\\partial_r u`."""
    r, jp, ip = _radial_pair(mode, r, order_shift=1)
    scale = mode.k * mode.gamma**mode.nu * mode.norm_factor
    vals = scale * (-jp / mode.j_at_gamma - ip / mode.i_at_gamma)
    return _shape(r, vals)


def eval_laplacian_u(mode: BallMode, r):
    """:math:`\\Delta u` at radius ``r``: ``-k^2`` on the J part, ``+k^2`` on the I part."""
    r, jp, ip = _radial_pair(mode, r)
    scale = mode.k**2 * mode.gamma**mode.nu * mode.norm_factor
    vals = scale * (-jp / mode.j_at_gamma - ip / mode.i_at_gamma)
    return _shape(r, vals)


def eval_laplacian_du(mode: BallMode, r):
    """Radial derivative of :math:`\\Delta u`."""
    r, jp, ip = _radial_pair(mode, r, order_shift=1)
    scale = mode.k**3 * mode.gamma**mode.nu * mode.norm_factor
    vals = scale * (jp / mode.j_at_gamma - ip / mode.i_at_gamma)
    return _shape(r, vals)


def boundary_alpha(mode: BallMode) -> float:
    """The critical boundary constant :math:`\\sqrt{4\\Gamma/(d|B|)}`."""
    return math.sqrt(4.0 * mode.eigenvalue / (mode.d * mode.volume))


def eval_normal_derivative_of_laplacian(mode: BallMode) -> float:
    """:math:`\\partial_r \\Delta u` on the sphere ``r = R``."""
    ratio_j = bessel_j(mode.nu + 1, mode.gamma) / mode.j_at_gamma
    ratio_i = bessel_i(mode.nu + 1, mode.gamma) / mode.i_at_gamma
    return mode.k**3 * mode.norm_factor * (ratio_j - ratio_i)


def radial_integral(mode: BallMode, f, power: int | None = None) -> float:
    """:math:`|\\mathbb{S}^{d-1}|\\int_0^R f(r) r^{d-1} dr` by adaptive Gauss-Kronrod."""
    p = mode.d - 1 if power is None else power
    val, _ = integrate.quad(
        lambda r: f(r) * r**p, 0.0, mode.R, epsabs=1e-13, epsrel=1e-13, limit=400
    )
    return sphere_area(mode.d) * val


def l2_norm_sq(mode: BallMode) -> float:
    """:math:`\\int_B u^2` by quadrature."""
    return radial_integral(mode, lambda r: eval_u(mode, r) ** 2)


@dataclass(frozen=True)
class MeanForms:
    """The two candidate closed forms for the integral of the mode, and the
    quadrature that decides between them."""

    closed_form: float
    closed_form_scaled: float  # variant carrying an extra R^{-(d-2)} factor
    quadrature: float

    @property
    def discrepancy(self) -> float:
        return abs(self.closed_form - self.quadrature)

    @property
    def scaled_discrepancy(self) -> float:
        return abs(self.closed_form_scaled - self.quadrature)


def mean_uB_forms(mode: BallMode) -> MeanForms:
    ratio_j = bessel_j(mode.nu + 1, mode.gamma) / mode.j_at_gamma
    ratio_i = bessel_i(mode.nu + 1, mode.gamma) / mode.i_at_gamma
    closed = math.sqrt(mode.d * mode.volume) / mode.gamma * (ratio_j - ratio_i)
    quad = radial_integral(mode, lambda r: eval_u(mode, r))
    return MeanForms(
        closed_form=closed,
        closed_form_scaled=closed / mode.R ** (mode.d - 2),
        quadrature=quad,
    )


def mean_uB(mode: BallMode) -> float:
    """Integral of the mode over the ball, closed form checked against quadrature.

    Raises
    ------
    ConsistencyError
        If the closed form and the radial quadrature differ by more than
        ``MEAN_CONSISTENCY_TOL``.
    """
    forms = mean_uB_forms(mode)
    if forms.discrepancy > MEAN_CONSISTENCY_TOL:
        raise ConsistencyError(
            f"closed form {forms.closed_form!r} vs quadrature {forms.quadrature!r}"
        )
    return forms.closed_form
