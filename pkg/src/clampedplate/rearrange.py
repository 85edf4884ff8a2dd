"""Schwarz and Talenti rearrangements of grid fields (planar case).

A rearranged field is stored as a :class:`RadialProfile` in the measure
coordinate ``s = |B_r| = pi r^2`` rather than on a second grid. The ``i``-th
largest nodal value sits at ``s_i = (i + 1/2) h^2``, the centre of the measure
it occupies, so equimeasurability holds exactly: the profile is a permutation
of the nodal values.

Radial quantities use exact 1-D formulas in ``s``. For a profile ``v(s)``,
``|grad v|^2`` integrates to ``int 4 pi s v'(s)^2 ds``, and the radial
solution of ``-Delta v = f`` vanishing at ``s = |omega|`` is
``v(s) = int_s^|omega| F(t) / (4 pi t) dt`` with ``F(t) = int_0^t f``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import integrate

from .fdsolver import GridDomain, ScalarField, poisson_solve
from .reduction import dirichlet_energy

__all__ = [
    "RadialProfile",
    "PolyaSzegoReport",
    "TalentiReport",
    "distribution_function",
    "schwarz",
    "sharp",
    "talenti_dagger",
    "radial_dirichlet_energy",
    "radial_poisson",
    "p1_rearranged_energy",
    "polya_szego_check",
    "talenti_compare",
]

TALENTI_POINTS = 10_000


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Values of a radial function against the measure coordinate ``s``.

    ``s`` is increasing; ``ball_volume`` is the measure of the support ball.
    """

    ball_volume: float
    s: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.s, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if s.shape != v.shape or s.ndim != 1:
            raise ValueError("s and values must be 1-D arrays of equal length")
        if np.any(np.diff(s) <= 0):
            raise ValueError("s must be strictly increasing")
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "values", v)

    @property
    def cell(self) -> float:
        """Measure carried by each sample."""
        return self.ball_volume / len(self.s)

    @property
    def radius(self) -> np.ndarray:
        return np.sqrt(self.s / math.pi)

    def lp_norm(self, p: float = 2.0) -> float:
        """:math:`(\\int |v|^p)^{1/p}` with each sample carrying ``cell``."""
        return float(((np.abs(self.values) ** p).sum() * self.cell) ** (1.0 / p))

    def integral(self) -> float:
        return float(self.values.sum() * self.cell)

    def __call__(self, s) -> np.ndarray:
        """Piecewise-linear interpolation, constant beyond the end samples."""
        return np.interp(s, self.s, self.values)

    def columns(self) -> np.ndarray:
        """``(radius, value)`` rows."""
        return np.column_stack((self.radius, self.values))


def distribution_function(f: ScalarField, t: float) -> float:
    """Measure of ``{f > t}``."""
    return float((f.values > t).sum() * f.domain.h ** 2)


def _profile(domain: GridDomain, desc: np.ndarray) -> RadialProfile:
    h2 = domain.h**2
    n = len(desc)
    return RadialProfile(n * h2, (np.arange(n) + 0.5) * h2, desc)


def _descending(values: np.ndarray) -> np.ndarray:
    # stable sort of the negated values keeps ties in node order
    return -np.sort(-values, kind="stable")


def schwarz(f: ScalarField, atol: float = 0.0) -> RadialProfile:
    """Decreasing rearrangement of a nonnegative field.

    Raises
    ------
    ValueError
        If ``f`` has a value below ``-atol``.
    """
    if f.values.min() < -atol:
        raise ValueError(f"Schwarz rearrangement needs f >= 0 (min {f.values.min():.3e})")
    return _profile(f.domain, _descending(np.maximum(f.values, 0.0)))


def sharp(z: ScalarField, atol: float = 0.0) -> RadialProfile:
    """Increasing rearrangement ``-(-z)*`` of a nonpositive field.

    Raises
    ------
    ValueError
        If ``z`` has a value above ``atol``.
    """
    if z.values.max() > atol:
        raise ValueError(f"increasing rearrangement needs z <= 0 (max {z.values.max():.3e})")
    p = schwarz(z.like(-z.values), atol=atol)
    return RadialProfile(p.ball_volume, p.s, -p.values)


def talenti_dagger(f: ScalarField) -> RadialProfile:
    """Signed rearrangement ``f+*(s) - f-*(|omega| - s)``.

    Sample ``i`` pairs the ``i``-th largest positive part with the
    ``(n-1-i)``-th largest negative part, so the result is nonincreasing and
    coincides with :func:`schwarz` for nonnegative ``f``.
    """
    pos = _descending(np.maximum(f.values, 0.0))
    neg = _descending(np.maximum(-f.values, 0.0))
    return _profile(f.domain, pos - neg[::-1])


def radial_dirichlet_energy(profile: RadialProfile, vanish_at_edge: bool = False) -> float:
    """Planar Dirichlet energy of the profile, linear in ``s`` between samples
    and flat before the first one.

    With ``vanish_at_edge`` the profile is closed by the point
    ``(ball_volume, 0)``. That is wrong for rearranged grid fields: the ring
    nodes sit up to ``h`` inside the boundary and hold O(h) values, yet occupy
    the last ``h^2/2`` of measure, so the closing slope is O(1/h). Left open,
    the energy misses only the O(h) boundary layer.
    """
    s = np.concatenate(([0.0], profile.s))
    v = np.concatenate((profile.values[:1], profile.values))
    if vanish_at_edge:
        s = np.append(s, profile.ball_volume)
        v = np.append(v, 0.0)
    slope = np.diff(v) / np.diff(s)
    # int 4 pi s m^2 ds over each segment
    return float((slope**2 * 2.0 * math.pi * np.diff(s**2)).sum())


def radial_poisson(source: RadialProfile, points: int = TALENTI_POINTS) -> RadialProfile:
    """Radial solution of ``-Delta v = f*`` vanishing on the ball boundary.

    ``source`` is read as a step function (sample ``i`` on its own cell); the
    outer integral uses the composite trapezoid rule on ``points`` nodes.
    """
    vol = source.ball_volume
    edges = np.arange(len(source.s) + 1) * source.cell
    mass = np.concatenate(([0.0], np.cumsum(source.values) * source.cell))
    t = np.linspace(0.0, vol, points)
    big_f = np.interp(t, edges, mass)
    dens = np.empty_like(t)
    dens[1:] = big_f[1:] / (4.0 * math.pi * t[1:])
    dens[0] = source.values[0] / (4.0 * math.pi)
    tail = integrate.cumulative_trapezoid(dens[::-1], -t[::-1], initial=0.0)[::-1]
    return RadialProfile(vol, t, tail)


def _p1_triangles(z: ScalarField) -> np.ndarray:
    """Sorted vertex values of ``|z|`` on the right-triangle mesh of the grid
    (each cell split along its rising diagonal); triangles where the field
    vanishes are dropped."""
    g = np.abs(z.to_grid())
    v00, v10 = g[:-1, :-1], g[:-1, 1:]
    v01, v11 = g[1:, :-1], g[1:, 1:]
    tri = np.concatenate(
        (np.stack((v00, v10, v11), -1).reshape(-1, 3), np.stack((v00, v01, v11), -1).reshape(-1, 3))
    )
    tri = tri[tri.max(axis=1) > 0]
    return np.sort(tri, axis=1)


def _ranges(start: np.ndarray, stop: np.ndarray):
    """Flattened ``(owner, index)`` pairs for the index ranges ``[start, stop)``."""
    n = np.maximum(stop - start, 0)
    owner = np.repeat(np.arange(len(start)), n)
    offset = np.arange(n.sum()) - np.repeat(np.cumsum(n) - n, n)
    return owner, start[owner] + offset


def _p1_distribution(tri: np.ndarray, area: float, t: np.ndarray, max_pairs: int = 4_000_000):
    """Measure of ``{U > t}`` and its t-derivative for the P1 interpolant ``U``
    at increasing thresholds ``t``.

    Only the (triangle, threshold) pairs with ``a < t < c`` need arithmetic;
    triangles entirely above ``t`` contribute their full area.
    """
    npts = len(t)
    a, b, c = tri[:, 0], tri[:, 1], tri[:, 2]
    ia = np.searchsorted(t, a, side="right")
    ib = np.searchsorted(t, b, side="right")
    ic = np.searchsorted(t, c, side="left")
    full = np.bincount(ia, minlength=npts + 1)[:npts]
    m = area * (len(tri) - np.cumsum(full))
    dm = np.zeros(npts)
    work = np.maximum(ic - ia, 0)
    bounds = np.searchsorted(np.cumsum(work), np.arange(max_pairs, work.sum() + max_pairs, max_pairs))
    lo = 0
    for hi in np.unique(np.append(bounds + 1, len(tri))):
        hi = min(int(hi), len(tri))
        if hi <= lo:
            continue
        sl = slice(lo, hi)
        for start, stop, upper in ((ia[sl], ib[sl], False), (ib[sl], ic[sl], True)):
            own, idx = _ranges(start, stop)
            if own.size == 0:
                continue
            own += lo
            ta, tb, tc, tt = a[own], b[own], c[own], t[idx]
            if upper:
                d = (tc - ta) * (tc - tb)
                np.add.at(m, idx, area * (tc - tt) ** 2 / d)
                np.add.at(dm, idx, -2.0 * area * (tc - tt) / d)
            else:
                d = (tb - ta) * (tc - ta)
                np.add.at(m, idx, area - area * (tt - ta) ** 2 / d)
                np.add.at(dm, idx, -2.0 * area * (tt - ta) / d)
        lo = hi
    return m, dm


def p1_rearranged_energy(z: ScalarField, points: int = 4096) -> tuple[float, float]:
    """Dirichlet energy of the Schwarz rearrangement of the piecewise-linear
    interpolant of ``|z|``, and the measure of its support.

    The grid energy :func:`dirichlet_energy` is exactly the energy of that
    interpolant, so the two sides of the Polya-Szego inequality refer to one
    function. By the coarea formula the rearranged energy is
    ``int 4 pi mu(t) / (-mu'(t)) dt``; ``mu`` is piecewise quadratic and
    ``C^1`` in ``t``, and the integral is taken by the midpoint rule.
    """
    tri = _p1_triangles(z)
    if len(tri) == 0:
        return 0.0, 0.0
    area = 0.5 * z.domain.h ** 2
    top = float(tri[:, 2].max())
    dt = top / points
    t = (np.arange(points) + 0.5) * dt
    m, dm = _p1_distribution(tri, area, t)
    ok = dm < 0
    total = float((4.0 * math.pi * m[ok] / -dm[ok]).sum())
    return total * dt, float(len(tri) * area)


def _rel_tol(domain: GridDomain, tol: float | None) -> float:
    return 10.0 * domain.h if tol is None else tol


@dataclass(frozen=True)
class PolyaSzegoReport:
    """Grid Dirichlet energy of ``z`` against that of its rearrangement.

    Passes when ``lhs >= (1 - tolerance) * rhs``.
    """

    lhs: float
    rhs: float
    support_area: float
    tolerance: float
    passed: bool

    def to_dict(self) -> dict:
        return asdict(self)


def polya_szego_check(z: ScalarField, tol: float | None = None) -> PolyaSzegoReport:
    """Compare ``int |grad z|^2`` on the grid with the energy of the
    rearrangement (see :func:`p1_rearranged_energy`).

    ``z`` may have either sign; ``|z|`` has the same energy as ``z`` and its
    rearrangement is ``-z#`` when ``z <= 0``.
    """
    tol = _rel_tol(z.domain, tol)
    lhs = dirichlet_energy(z)
    rhs, support = p1_rearranged_energy(z)
    return PolyaSzegoReport(lhs, rhs, support, tol, bool(lhs >= (1.0 - tol) * rhs))


@dataclass(frozen=True, eq=False)
class TalentiReport:
    """Symmetrised solution ``v`` against the rearranged solution ``u*``.

    ``min_gap`` is ``min(v - u*)`` over the samples of ``u*``; the check
    passes when ``min_gap >= -tolerance * max(u)``.
    """

    v: RadialProfile
    u_star: RadialProfile
    min_gap: float
    max_u: float
    tolerance: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "min_gap": self.min_gap,
            "max_u": self.max_u,
            "relative_min_gap": self.min_gap / self.max_u if self.max_u else 0.0,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


def talenti_compare(domain: GridDomain, f: ScalarField, tol: float | None = None) -> TalentiReport:
    """Solve ``-Delta u = f`` on the grid and compare ``u*`` with the radial
    solution driven by ``f*``.

    Raises
    ------
    ValueError
        If ``f`` takes negative values.
    """
    if f.values.min() < 0:
        raise ValueError("Talenti comparison needs a nonnegative source")
    tol = _rel_tol(domain, tol)
    u = poisson_solve(domain, f)
    umax = float(u.values.max())
    u_star = schwarz(u, atol=1e-12 * max(umax, 1e-300))
    v = radial_poisson(schwarz(f))
    gap = float((v(u_star.s) - u_star.values).min())
    return TalentiReport(v, u_star, gap, umax, tol, bool(gap >= -tol * umax))
