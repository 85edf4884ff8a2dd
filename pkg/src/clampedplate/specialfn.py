r"""Bessel functions :math:`J_\nu`, :math:`I_\nu` of real order and their zeros.

Evaluation strategy
-------------------
* :math:`J_\nu` uses the ascending power series while the argument is small
  compared to the order (no cancellation), and Miller's downward recurrence
  normalised by

  .. math:: (x/2)^{\nu_0} = \sum_{k\ge0} (\nu_0+2k)\frac{\Gamma(\nu_0+k)}{k!} J_{\nu_0+2k}(x)

  everywhere else.
* :math:`I_\nu` is summed from its (positive) series in exponentially scaled
  form, switching to the Hankel asymptotic expansion for very large arguments.

Zeros are located by a sign-change scan followed by bisection, which is
deterministic and needs no derivative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "CrossProductZero",
    "bessel_j",
    "bessel_i",
    "bessel_ie",
    "bessel_j_zero",
    "cross_product",
    "gamma_nu",
    "find_bracketed_root",
]

ROOT_RTOL = 1e-12
# Bisection runs to this width; well inside ROOT_RTOL.
_BISECT_RTOL = 4e-16
SCAN_STEP = 0.1
# Above this argument e^{-x} I_nu(x) is taken from the asymptotic expansion;
# the scaled series' first term would underflow.
_IE_ASYMPTOTIC_X = 690.0


def _check_domain(nu, x):
    if nu < 0:
        raise ValueError(f"order must be nonnegative, got nu={nu}")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or np.any(~np.isfinite(x)):
        raise ValueError("argument must be finite and nonnegative")
    return x


def _series_limit(nu):
    # Largest x for which the alternating J-series has no growing terms.
    return 2.0 * math.sqrt(nu + 1.0)


def _j_series(nu, x):
    """Ascending series for J_nu(x); fine while x**2/4 is O(nu+1)."""
    half = 0.5 * x
    q = half * half
    with np.errstate(divide="ignore"):
        lead = np.where(x > 0, np.exp(nu * np.log(np.where(x > 0, half, 1.0))), 0.0)
    if nu == 0:
        lead = np.ones_like(x)
    term = lead / math.gamma(nu + 1.0)
    total = term.copy()
    for k in range(1, 200):
        term = -term * q / (k * (k + nu))
        total += term
        if np.all(np.abs(term) <= 1e-17 * np.abs(total)):
            break
    return total


def _miller_top(nu, xmax):
    top = int(math.floor(nu)) + int(xmax + 40 + 10 * xmax ** (1.0 / 3.0))
    return top + top % 2  # even, so the normalisation sum sees the start


def _miller_coefs(nu0, top):
    # (nu0 + 2k) Gamma(nu0 + k) / k!, with the k = 0 term equal to Gamma(nu0 + 1)
    coefs = [math.gamma(nu0 + 1.0)]
    for k in range(1, top // 2 + 1):
        coefs.append((nu0 + 2 * k) * math.exp(math.lgamma(nu0 + k) - math.lgamma(k + 1)))
    return coefs


def _j_miller_scalar(nu, x):
    m = int(math.floor(nu))
    nu0 = nu - m
    top = _miller_top(nu, x)
    coefs = _miller_coefs(nu0, top)
    j_above, j_here = 0.0, 1e-30
    norm = 0.0
    j_m = 0.0
    for n in range(top, 0, -1):
        if n % 2 == 0:
            norm += coefs[n // 2] * j_here
        if n == m:
            j_m = j_here
        # J_{nu0+n-1} = 2(nu0+n)/x J_{nu0+n} - J_{nu0+n+1}
        j_above, j_here = j_here, 2.0 * (nu0 + n) / x * j_here - j_above
        if abs(j_here) > 1e250:
            j_above *= 1e-250
            j_here *= 1e-250
            norm *= 1e-250
            j_m *= 1e-250
    norm += coefs[0] * j_here
    if m == 0:
        j_m = j_here
    return j_m * (0.5 * x) ** nu0 / norm


def _j_miller(nu, x):
    """Miller's backward recurrence for J_nu(x), x > 0 (vector)."""
    if x.size <= 8:
        return np.array([_j_miller_scalar(nu, float(v)) for v in x])
    m = int(math.floor(nu))
    nu0 = nu - m
    top = _miller_top(nu, float(np.max(x)))
    coefs = _miller_coefs(nu0, top)
    j_above = np.zeros_like(x)
    j_here = np.full_like(x, 1e-30)
    norm = np.zeros_like(x)
    j_m = np.zeros_like(x)
    for n in range(top, 0, -1):
        if n % 2 == 0:
            norm += coefs[n // 2] * j_here
        if n == m:
            j_m = j_here.copy()
        j_below = 2.0 * (nu0 + n) / x * j_here - j_above
        j_above, j_here = j_here, j_below
        big = np.abs(j_here) > 1e250
        if np.any(big):
            s = np.where(big, 1e-250, 1.0)
            j_above *= s
            j_here *= s
            norm *= s
            j_m *= s
    norm += coefs[0] * j_here
    if m == 0:
        j_m = j_here
    return j_m * np.power(0.5 * x, nu0) / norm


def bessel_j(nu: float, x):
    r"""Bessel function of the first kind :math:`J_\nu(x)`.

    Parameters
    ----------
    nu : float
        Order, ``nu >= 0``.
    x : float or array_like
        Argument(s), ``x >= 0``.

    Returns
    -------
    float or ndarray
        Matches the shape of ``x``.
    """
    xa = _check_domain(nu, x)
    flat = np.atleast_1d(xa).astype(float).ravel()
    out = np.empty_like(flat)
    small = flat <= _series_limit(nu)
    if np.any(small):
        out[small] = _j_series(nu, flat[small])
    if np.any(~small):
        out[~small] = _j_miller(nu, flat[~small])
    if xa.ndim == 0:
        return float(out[0])
    return out.reshape(xa.shape)


def _ie_series(nu, x):
    # e^{-x} I_nu(x) via positive series; x > 0, x <= _IE_ASYMPTOTIC_X
    half = 0.5 * x
    q = half * half
    # the power, not exp(nu log(half)), so half underflowing to 0 stays finite
    term = np.power(half, nu) * np.exp(-x - math.lgamma(nu + 1.0))
    total = term.copy()
    kmax = int(np.max(x)) + 60 + int(10 * math.sqrt(np.max(x)))
    for k in range(1, kmax + 1):
        term = term * q / (k * (k + nu))
        total += term
        if k > np.max(half) and np.all(term <= 1e-17 * total):
            break
    return total


def _ie_asymptotic(nu, x):
    mu = 4.0 * nu * nu
    term = np.ones_like(x)
    total = term.copy()
    for k in range(1, 40):
        new = -term * (mu - (2 * k - 1) ** 2) / (k * 8.0 * x)
        if np.all(np.abs(new) >= np.abs(term)):
            break
        term = new
        total += term
        if np.all(np.abs(term) <= 1e-17 * np.abs(total)):
            break
    return total / np.sqrt(2.0 * math.pi * x)


def bessel_ie(nu: float, x):
    r"""Exponentially scaled modified Bessel function :math:`e^{-x} I_\nu(x)`.

    Finite for every nonnegative argument; the unscaled :func:`bessel_i`
    overflows past ``x ~ 709``.
    """
    xa = _check_domain(nu, x)
    flat = np.atleast_1d(xa).astype(float).ravel()
    out = np.empty_like(flat)
    zero = flat == 0
    out[zero] = 1.0 if nu == 0 else 0.0
    mid = (~zero) & (flat <= _IE_ASYMPTOTIC_X)
    far = flat > _IE_ASYMPTOTIC_X
    if np.any(mid):
        out[mid] = _ie_series(nu, flat[mid])
    if np.any(far):
        out[far] = _ie_asymptotic(nu, flat[far])
    if xa.ndim == 0:
        return float(out[0])
    return out.reshape(xa.shape)


def bessel_i(nu: float, x):
    r"""Modified Bessel function of the first kind :math:`I_\nu(x)`.

    Raises
    ------
    OverflowError
        If the result is not representable in double precision.
    """
    xa = _check_domain(nu, x)
    if np.any(xa > 709.78):
        raise OverflowError("I_nu(x) overflows for x > 709.78; use bessel_ie")
    scaled = np.asarray(bessel_ie(nu, xa))
    out = scaled * np.exp(xa)
    if xa.ndim == 0:
        return float(out)
    return out


def find_bracketed_root(f, a: float, b: float, rtol: float = _BISECT_RTOL) -> float:
    """Bisection on ``[a, b]`` where ``f(a)`` and ``f(b)`` differ in sign."""
    a, b = float(a), float(b)
    fa, fb = f(a), f(b)
    if fa == 0:
        return a
    if fb == 0:
        return b
    if np.sign(fa) == np.sign(fb):
        raise ValueError(f"no sign change on [{a}, {b}]: f={fa:.3e}, {fb:.3e}")
    while b - a > rtol * max(abs(a), abs(b)):
        mid = 0.5 * (a + b)
        if mid <= a or mid >= b:
            break
        fm = f(mid)
        if fm == 0:
            return mid
        if np.sign(fm) == np.sign(fa):
            a, fa = mid, fm
        else:
            b = mid
    return 0.5 * (a + b)


def _scan_sign_changes(f, start: float, count: int, step: float = SCAN_STEP):
    """Return the first ``count`` sign-change brackets of ``f`` right of ``start``."""
    brackets = []
    a, fa = start, f(start)
    while len(brackets) < count:
        grid = a + step * np.arange(1, 257)
        vals = f(grid)
        prev = np.concatenate(([fa], vals[:-1]))
        lefts = np.concatenate(([a], grid[:-1]))
        hits = np.nonzero(np.sign(prev) * np.sign(vals) < 0)[0]
        for i in hits:
            brackets.append((lefts[i], grid[i]))
            if len(brackets) == count:
                break
        a, fa = grid[-1], vals[-1]
    return brackets


def bessel_j_zero(nu: float, n: int) -> float:
    r"""The ``n``-th positive zero :math:`j_{\nu,n}` of :math:`J_\nu`."""
    if n < 1:
        raise ValueError("zero index n must be >= 1")
    if nu < 0:
        raise ValueError("order must be nonnegative")
    # J_nu has no zeros in (0, nu], so the scan can start at nu.
    brackets = _scan_sign_changes(lambda x: bessel_j(nu, x), max(nu, 1e-8), n)
    a, b = brackets[n - 1]
    return find_bracketed_root(lambda x: bessel_j(nu, x), a, b)


def cross_product(nu: float, r):
    r"""Scaled cross product :math:`e^{-r}F_\nu(r)`, where
    :math:`F_\nu = J_\nu I_{\nu+1} + J_{\nu+1} I_\nu`.

    The scaling does not move the zeros but keeps the value finite.
    """
    return bessel_j(nu, r) * bessel_ie(nu + 1, r) + bessel_j(nu + 1, r) * bessel_ie(nu, r)


@dataclass(frozen=True)
class CrossProductZero:
    """First positive zero ``gamma`` of the Bessel cross product, with the
    two zeros of :math:`J_\\nu` that bracket it."""

    nu: float
    gamma: float
    j1: float
    j2: float


def gamma_nu(d: int) -> CrossProductZero:
    """Locate :math:`\\gamma_\\nu` for the dimension ``d`` (``nu = d/2 - 1``).

    The zero is searched between the first two zeros of :math:`J_\\nu`.
    """
    if int(d) != d or d < 2:
        raise ValueError(f"dimension must be an integer >= 2, got {d}")
    nu = d / 2.0 - 1.0
    j1 = bessel_j_zero(nu, 1)
    j2 = bessel_j_zero(nu, 2)
    f = lambda r: cross_product(nu, r)  # noqa: E731
    width = j2 - j1
    a, b = j1 + 1e-9 * width, j2 - 1e-9 * width
    if np.sign(f(a)) == np.sign(f(b)):
        raise ArithmeticError(
            f"cross product has no sign change on ({j1}, {j2}) for nu={nu}"
        )
    g = find_bracketed_root(f, a, b)
    return CrossProductZero(nu=nu, gamma=float(g), j1=float(j1), j2=float(j2))
