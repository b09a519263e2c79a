"""Special functions and root finding used throughout the package.

Everything here is vectorised over numpy arrays where that makes sense and
takes explicit ``numpy.random.Generator`` objects for randomness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate, special

from .errors import BracketError, ConvergenceError, DomainError

INV_E = math.exp(-1.0)

# slack below -1/e accepted by lambert_w0; covers rounding of -1/e itself
LAMBERT_SLACK = 1e-12


def _lambert_initial(x: np.ndarray) -> np.ndarray:
    """Starting point for Halley's iteration on [-1/e, 0]."""
    w = np.empty_like(x)
    near = x < -0.25
    # branch-point series in p = sqrt(2 (e x + 1))
    p = np.sqrt(np.maximum(2.0 * (math.e * x[near] + 1.0), 0.0))
    w[near] = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p**3
    xs = x[~near]
    # Taylor series about 0
    w[~near] = xs - xs**2 + 1.5 * xs**3
    return w


def lambert_w0(x):
    """Principal branch W0 of the Lambert W function on ``[-1/e, 0]``.

    Parameters
    ----------
    x : float or array_like
        Arguments in ``[-1/e - LAMBERT_SLACK, 0]``.

    Returns
    -------
    float or ndarray
        ``w >= -1`` with ``w * exp(w) == x``.

    Raises
    ------
    DomainError
        If any argument lies outside the accepted interval.

    Notes
    -----
    Halley iteration started from a branch-point series (x < -0.25) or the
    Taylor series about zero. Arguments within the slack of -1/e map to -1.
    """
    scalar = np.ndim(x) == 0
    x = np.asarray(x, dtype=float)
    if np.any(np.isnan(x)) or np.any(x > 0.0) or np.any(x < -INV_E - LAMBERT_SLACK):
        raise DomainError("lambert_w0 is only defined here on [-1/e, 0]")
    x = np.atleast_1d(x)
    w = _lambert_initial(x)
    branch = x <= -INV_E
    active = ~branch & (x != 0.0)
    for _ in range(64):
        if not active.any():
            break
        wa = w[active]
        ew = np.exp(wa)
        f = wa * ew - x[active]
        wp1 = wa + 1.0
        denom = ew * wp1 - (wa + 2.0) * f / (2.0 * wp1)
        step = np.where(denom != 0.0, f / np.where(denom != 0.0, denom, 1.0), 0.0)
        wa = np.maximum(wa - step, -1.0)
        w[active] = wa
        done = np.abs(step) <= 4 * np.finfo(float).eps * (1.0 + np.abs(wa))
        idx = np.flatnonzero(active)
        active[idx[done]] = False
    w[branch] = -1.0
    w[x == 0.0] = 0.0
    return float(w[0]) if scalar else w


def q_function(x):
    """Gaussian tail probability ``Q(x) = P(Z > x)`` for standard normal Z."""
    if np.ndim(x) == 0:
        return 0.5 * math.erfc(float(x) / math.sqrt(2.0))
    return 0.5 * special.erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))


def _log_bessel_k_quad(nu: float, x: float) -> float:
    # K_nu(x) = int_0^inf exp(-x cosh t) cosh(nu t) dt, split at the integrand peak
    def g(t):
        return -x * math.cosh(t) + nu * t

    # peak of exp(-x cosh t + nu t): x sinh t = nu
    t_peak = math.asinh(nu / x) if nu > 0 else 0.0
    g_peak = g(t_peak)

    def integrand(t):
        return math.exp(g(t) - g_peak) + math.exp(g(-t) - g_peak)

    # integrand is below exp(-800) of its peak beyond t_hi
    t_hi = t_peak + 1.0
    while g(t_hi) - g_peak > -800.0:
        t_hi += 1.0
    val = 0.0
    for a, b in ((0.0, t_peak), (t_peak, t_hi)):
        if b > a:
            val += integrate.quad(integrand, a, b, epsabs=0.0, epsrel=1e-12, limit=200)[0]
    return g_peak + math.log(0.5 * val)


def log_bessel_k(nu: float, x: float) -> float:
    """Natural log of the modified Bessel function of the second kind.

    Uses the exponentially scaled ``scipy.special.kve`` and falls back to a
    peak-centred integral representation when ``kve`` overflows.
    """
    if not x > 0.0:
        raise DomainError("log_bessel_k requires x > 0")
    nu = abs(float(nu))
    k = special.kve(nu, x)
    if np.isfinite(k) and k > 0.0:
        return math.log(k) - x
    return _log_bessel_k_quad(nu, x)


@dataclass(frozen=True)
class BisectionSpec:
    """Bracket and stopping rule for :func:`bisect`."""

    lo: float
    hi: float
    tol: float
    max_iter: int = 200

    def __post_init__(self):
        if not self.lo < self.hi:
            raise DomainError(f"bisection bracket needs lo < hi, got [{self.lo}, {self.hi}]")
        if not self.tol > 0.0:
            raise DomainError("bisection tolerance must be positive")
        if self.max_iter < 1:
            raise DomainError("max_iter must be a positive integer")


def bisect(f: Callable[[float], float], spec: BisectionSpec) -> float:
    """Root of a monotone function by interval halving.

    Stops once the bracket is no wider than ``spec.tol`` and returns its
    midpoint. An endpoint where ``f`` is exactly zero is returned as is.
    """
    lo, hi = float(spec.lo), float(spec.hi)
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if np.sign(flo) == np.sign(fhi):
        raise BracketError(f"no sign change on [{lo}, {hi}]: f = {flo}, {fhi}")
    for _ in range(spec.max_iter):
        if hi - lo <= spec.tol:
            return 0.5 * (lo + hi)
        mid = 0.5 * (lo + hi)
        fmid = f(mid)
        if fmid == 0.0:
            return mid
        if np.sign(fmid) == np.sign(flo):
            lo, flo = mid, fmid
        else:
            hi = mid
    if hi - lo <= spec.tol:
        return 0.5 * (lo + hi)
    raise ConvergenceError(f"bisection did not reach tol={spec.tol} in {spec.max_iter} steps")


def bisect_many(f, lo, hi, tol, max_iter: int = 200) -> np.ndarray:
    """Elementwise bisection for a batch of independent monotone problems.

    ``f`` maps an array of abscissae to an array of values of the same shape;
    element ``i`` must change sign on ``[lo[i], hi[i]]``.
    """
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    lo, hi = np.broadcast_arrays(lo, hi)
    lo, hi = lo.copy(), hi.copy()
    tol = np.broadcast_to(np.asarray(tol, dtype=float), lo.shape)
    flo = np.asarray(f(lo), dtype=float)
    fhi = np.asarray(f(hi), dtype=float)
    bad = (np.sign(flo) == np.sign(fhi)) & (flo != 0.0)
    if bad.any():
        raise BracketError(f"{int(bad.sum())} brackets without a sign change")
    for _ in range(max_iter):
        if np.all(hi - lo <= tol):
            break
        mid = 0.5 * (lo + hi)
        fmid = np.asarray(f(mid), dtype=float)
        same = np.sign(fmid) == np.sign(flo)
        lo = np.where(same, mid, lo)
        flo = np.where(same, fmid, flo)
        hi = np.where(same, hi, mid)
    else:
        if not np.all(hi - lo <= tol):
            raise ConvergenceError(f"batched bisection did not converge in {max_iter} steps")
    return 0.5 * (lo + hi)


def sample_gamma(shape: float, scale: float, rng: np.random.Generator, size=None):
    """Gamma(shape, scale) draws from a caller-owned generator."""
    if not (shape > 0.0 and scale > 0.0):
        raise DomainError("gamma shape and scale must be positive")
    return rng.gamma(shape, scale, size=size)
