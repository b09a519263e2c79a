"""Transmit constellation design for the four signalling schemes.

Every design obeys three constraints on the transmit photon rates ``I(m)``:
``I(0) = 0``, the average-power limit, and the peak-rate bound that keeps the
top level at or below the SPAD saturation point ``1/T_d`` per pixel.

* Uniform: ``I(m) = m d``.
* Sqrt: ``I(m) = m^2 d`` (square-root receiver).
* PreDistortion: ``I(m)`` chosen through Lambert W0 so the received array
  means are ``m d + xi``.
* Joint: pre-distortion composed with the inverse VNT so that the VNT output
  means are ``m d + xi`` with roughly unit noise variance.

The core routines (``_lfun``, ``_dstar_from_rhs`` ...) are vectorised over the
loss / power axis; the fading simulator uses them directly.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import mathfn
from .errors import DesignError, DomainError, NumericError
from .linkmodel import LinkBudget, ModulationConfig, SpadArrayParams, peak_rate_bound, per_pixel_rate
from .spad import GaussianMoments, array_moments, dead_time_theta
from .vnt import VntParams, vnt_forward, vnt_inverse

BISECT_REL_TOL = 1e-12
BISECT_MAX_ITER = 200


class Scheme(str, enum.Enum):
    UNIFORM = "uniform"
    SQRT = "sqrt"
    PRE_DISTORTION = "predistortion"
    JOINT = "joint"

    @classmethod
    def parse(cls, name: str) -> "Scheme":
        key = name.strip().lower().replace("-", "").replace("_", "")
        aliases = {"uni": cls.UNIFORM, "pre": cls.PRE_DISTORTION, "jt": cls.JOINT}
        for s in cls:
            if s.value == key:
                return s
        if key in aliases:
            return aliases[key]
        raise ValueError(f"unknown scheme {name!r}")


@dataclass(frozen=True)
class ConstellationDesign:
    """A designed transmit constellation and its receiver-side statistics.

    ``separation`` is expressed in the scheme's own domain: transmit photon
    rate for Uniform/Sqrt, array photocount for PreDistortion and VNT output
    for Joint. ``offset`` is the matching constant ``xi`` (0 for Uniform and
    Sqrt). ``transformed_means`` holds the approximate square-root domain
    means for Sqrt and the VNT-domain means ``m d + xi`` for Joint.
    """

    scheme: Scheme
    tx_rates: np.ndarray
    separation: float
    offset: float
    rx_moments: GaussianMoments
    link: LinkBudget
    spad: SpadArrayParams
    modulation: ModulationConfig
    power_limited: bool
    transformed_means: np.ndarray | None = field(default=None)

    @property
    def order(self) -> int:
        return self.modulation.order

    @property
    def symbol_duration(self) -> float:
        return self.modulation.symbol_duration

    @property
    def avg_power(self) -> float:
        return self.link.photon_energy * float(np.mean(self.tx_rates))

    @property
    def vnt_params(self) -> VntParams:
        return VntParams.for_link(self.spad.n_pixels, self.symbol_duration, self.spad.dead_time)


# ---------------------------------------------------------------------------
# shared pieces

def _power_rhs(loss, avg_power, link: LinkBudget, spad: SpadArrayParams):
    """Right-hand side of the average-power constraint written in W0 units."""
    hv = link.photon_energy
    return -spad.pde * spad.dead_time * (np.asarray(loss) * np.asarray(avg_power) + link.background_rate * hv) / (
        spad.n_pixels * hv
    )


def _w0_args(rx_means, spad: SpadArrayParams, ts: float):
    return -np.asarray(rx_means, dtype=float) * spad.dead_time / (spad.n_pixels * ts)


def _tx_from_rx_means(rx_means, loss, link: LinkBudget, spad: SpadArrayParams, ts: float):
    """Transmit rates whose array means equal ``rx_means`` (Lambert-W inversion)."""
    w = mathfn.lambert_w0(_w0_args(rx_means, spad, ts))
    rates = -spad.n_pixels * w / (loss * spad.pde * spad.dead_time) - link.background_rate / loss
    return rates


def predistortion_offset(link: LinkBudget, spad: SpadArrayParams, ts: float) -> float:
    """Array mean produced by background light alone (level 0)."""
    a = link.background_rate * spad.pde
    return a * ts * math.exp(-a * spad.dead_time / spad.n_pixels)


def joint_offset(link: LinkBudget, spad: SpadArrayParams, ts: float) -> float:
    """VNT image of the background-only array mean."""
    p = VntParams.for_link(spad.n_pixels, ts, spad.dead_time)
    arg = 1.0 - 2.0 * p.theta * predistortion_offset(link, spad, ts) / spad.n_pixels
    return -p.scale * math.asin(arg)


def saturation_mean(spad: SpadArrayParams, ts: float) -> float:
    """Array mean at the saturation point, ``N T_s / (e T_d)``."""
    return spad.n_pixels * ts / (math.e * spad.dead_time)


def predistortion_dmax(link, spad, mod) -> float:
    ts = mod.symbol_duration
    return (saturation_mean(spad, ts) - predistortion_offset(link, spad, ts)) / (mod.order - 1)


def joint_dmax(link, spad, mod) -> float:
    ts = mod.symbol_duration
    p = VntParams.for_link(spad.n_pixels, ts, spad.dead_time)
    arg = 1.0 - 2.0 * p.theta * ts / (spad.dead_time * math.e)
    if not -1.0 <= arg <= 1.0:
        raise DesignError(f"arcsine argument {arg} outside [-1, 1]")
    top = -p.scale * math.asin(arg)
    return (top - joint_offset(link, spad, ts)) / (mod.order - 1)


def _rx_targets(scheme: Scheme, d, xi, order: int, vp: VntParams | None):
    """Array means targeted by pre-distortion or joint designs, shape (..., M)."""
    m = np.arange(order)
    y = np.asarray(d, dtype=float)[..., None] * m + xi
    if scheme is Scheme.PRE_DISTORTION:
        return y
    # clip roundoff at the top of the principal range
    y = np.minimum(y, vp.half_range)
    return vnt_inverse(y, vp)


def _lfun(scheme: Scheme, d, xi, order: int, spad: SpadArrayParams, ts: float, vp=None):
    means = _rx_targets(scheme, d, xi, order, vp)
    args = _w0_args(means, spad, ts)
    if np.any(args < -mathfn.INV_E - mathfn.LAMBERT_SLACK) or np.any(args > 0.0):
        raise DomainError("Lambert W argument left [-1/e, 0]; d exceeds its maximum")
    args = np.maximum(args, -mathfn.INV_E)
    w = mathfn.lambert_w0(args.ravel()).reshape(args.shape)
    return w.mean(axis=-1)


def lfun_pre(d, link: LinkBudget, spad: SpadArrayParams, order: int, ts: float):
    """Average of W0 over the pre-distortion levels for separation ``d``.

    Monotonically decreasing in ``d``; the average-power constraint is
    ``lfun_pre(d) >= rhs``. ``order = 1`` reduces to the single level 0.
    """
    xi = predistortion_offset(link, spad, ts)
    out = _lfun(Scheme.PRE_DISTORTION, d, xi, order, spad, ts)
    return float(out) if np.ndim(out) == 0 else out


def lfun_joint(d, link: LinkBudget, spad: SpadArrayParams, order: int, ts: float):
    """Joint-scheme counterpart of :func:`lfun_pre` (targets in the VNT domain)."""
    vp = VntParams.for_link(spad.n_pixels, ts, spad.dead_time)
    xi = joint_offset(link, spad, ts)
    out = _lfun(Scheme.JOINT, d, xi, order, spad, ts, vp)
    return float(out) if np.ndim(out) == 0 else out


def _dstar_many(scheme: Scheme, rhs, link, spad, mod):
    """Optimal separation for each entry of ``rhs`` (power-constraint level).

    Returns ``(d_star, power_limited)`` arrays.
    """
    ts, order = mod.symbol_duration, mod.order
    if scheme is Scheme.PRE_DISTORTION:
        xi, dmax, vp = predistortion_offset(link, spad, ts), predistortion_dmax(link, spad, mod), None
    else:
        vp = VntParams.for_link(spad.n_pixels, ts, spad.dead_time)
        xi, dmax = joint_offset(link, spad, ts), joint_dmax(link, spad, mod)
    if not dmax > 0.0:
        raise DesignError("maximum separation is not positive")
    rhs = np.atleast_1d(np.asarray(rhs, dtype=float))
    l_max = _lfun(scheme, dmax, xi, order, spad, ts, vp)
    power_limited = l_max <= rhs
    d = np.full(rhs.shape, dmax)
    if power_limited.any():
        r = rhs[power_limited]

        def g(dd):
            return _lfun(scheme, dd, xi, order, spad, ts, vp) - r

        try:
            d[power_limited] = mathfn.bisect_many(
                g, 0.0, dmax, BISECT_REL_TOL * dmax, BISECT_MAX_ITER
            )
        except NumericError as exc:
            raise DesignError(f"separation root search failed: {exc}") from exc
    return d, power_limited


def _finish_lambert_design(scheme, d, power_limited, link, spad, mod) -> ConstellationDesign:
    ts, order = mod.symbol_duration, mod.order
    if scheme is Scheme.PRE_DISTORTION:
        xi, vp = predistortion_offset(link, spad, ts), None
    else:
        vp = VntParams.for_link(spad.n_pixels, ts, spad.dead_time)
        xi = joint_offset(link, spad, ts)
    means = _rx_targets(scheme, d, xi, order, vp)
    rates = _tx_from_rx_means(np.maximum(means, 0.0), link.loss, link, spad, ts)
    # level 0 is background only by construction; the formula leaves roundoff
    rates[0] = 0.0
    rates = np.maximum(rates, 0.0)
    peak = peak_rate_bound(link, spad)
    if power_limited:
        rates[-1] = min(rates[-1], peak)
    else:
        # d = d_max puts the top level on the branch point, where W0 = -1
        rates[-1] = peak
    lam = per_pixel_rate(rates, link, spad)
    moments = array_moments(lam, spad, ts)
    tmeans = np.arange(order) * d + xi if scheme is Scheme.JOINT else None
    return ConstellationDesign(
        scheme, rates, float(d), float(xi), moments, link, spad, mod, bool(power_limited), tmeans
    )


# ---------------------------------------------------------------------------
# public designs

def uniform_separation(link, spad, mod):
    """``(d_star, power_limited)`` for uniform signalling."""
    m1 = mod.order - 1
    d_power = 2.0 * link.avg_power_limit / (link.photon_energy * m1)
    d_peak = peak_rate_bound(link, spad) / m1
    return min(d_power, d_peak), d_power <= d_peak


def sqrt_separation(link, spad, mod):
    """``(d_star, power_limited)`` for square-law signalling."""
    m = mod.order
    d_power = 6.0 * link.avg_power_limit / (link.photon_energy * (m - 1) * (2 * m - 1))
    d_peak = peak_rate_bound(link, spad) / (m - 1) ** 2
    return min(d_power, d_peak), d_power <= d_peak


def design_uniform(link: LinkBudget, spad: SpadArrayParams, mod: ModulationConfig) -> ConstellationDesign:
    d, limited = uniform_separation(link, spad, mod)
    rates = np.arange(mod.order) * d
    moments = array_moments(per_pixel_rate(rates, link, spad), spad, mod.symbol_duration)
    return ConstellationDesign(Scheme.UNIFORM, rates, d, 0.0, moments, link, spad, mod, limited)


def sqrt_transformed_means(lam, n_pixels: int, ts: float, td: float):
    """Approximate mean of ``sqrt(r)``: ``sqrt(N lam T_s) exp(-lam T_d / 2)``."""
    lam = np.asarray(lam, dtype=float)
    return np.sqrt(n_pixels * lam * ts) * np.exp(-0.5 * lam * td)


def design_sqrt(link: LinkBudget, spad: SpadArrayParams, mod: ModulationConfig) -> ConstellationDesign:
    d, limited = sqrt_separation(link, spad, mod)
    rates = np.arange(mod.order) ** 2 * d
    lam = per_pixel_rate(rates, link, spad)
    ts = mod.symbol_duration
    moments = array_moments(lam, spad, ts)
    tmeans = sqrt_transformed_means(lam, spad.n_pixels, ts, spad.dead_time)
    return ConstellationDesign(Scheme.SQRT, rates, d, 0.0, moments, link, spad, mod, limited, tmeans)


def design_predistortion(link: LinkBudget, spad: SpadArrayParams, mod: ModulationConfig) -> ConstellationDesign:
    """Lambert-W pre-distortion giving equidistant received array means."""
    peak_rate_bound(link, spad)
    rhs = _power_rhs(link.loss, link.avg_power_limit, link, spad)
    d, limited = _dstar_many(Scheme.PRE_DISTORTION, rhs, link, spad, mod)
    return _finish_lambert_design(Scheme.PRE_DISTORTION, d[0], limited[0], link, spad, mod)


def design_joint(link: LinkBudget, spad: SpadArrayParams, mod: ModulationConfig) -> ConstellationDesign:
    """Pre-distortion through the inverse VNT: equidistant VNT-domain means."""
    peak_rate_bound(link, spad)
    rhs = _power_rhs(link.loss, link.avg_power_limit, link, spad)
    d, limited = _dstar_many(Scheme.JOINT, rhs, link, spad, mod)
    return _finish_lambert_design(Scheme.JOINT, d[0], limited[0], link, spad, mod)


DESIGNERS = {
    Scheme.UNIFORM: design_uniform,
    Scheme.SQRT: design_sqrt,
    Scheme.PRE_DISTORTION: design_predistortion,
    Scheme.JOINT: design_joint,
}


def design(scheme, link, spad, mod) -> ConstellationDesign:
    return DESIGNERS[Scheme.parse(scheme) if isinstance(scheme, str) else scheme](link, spad, mod)


def separation_many(scheme: Scheme, losses, link: LinkBudget, spad: SpadArrayParams, mod: ModulationConfig):
    """Vectorised ``(d_star, power_limited)`` over an array of channel losses.

    Only the Lambert-W schemes need this: their offset and maximum separation
    do not depend on the loss, so one batched bisection covers all losses.
    """
    losses = np.asarray(losses, dtype=float)
    rhs = _power_rhs(losses, link.avg_power_limit, link, spad)
    return _dstar_many(scheme, rhs, link, spad, mod)


def check_constraints(design: ConstellationDesign, rtol: float = 1e-9) -> None:
    """Raise ``DesignError`` if a design violates one of the three constraints."""
    rates = design.tx_rates
    if rates[0] != 0.0:
        raise DesignError("I(0) must be 0")
    if np.any(np.diff(rates) < 0.0):
        raise DesignError("transmit rates must be non-decreasing")
    if design.avg_power > design.link.avg_power_limit * (1.0 + rtol):
        raise DesignError("average power limit exceeded")
    if rates[-1] > peak_rate_bound(design.link, design.spad) * (1.0 + rtol):
        raise DesignError("peak rate bound exceeded")


def vnt_means(design: ConstellationDesign):
    """VNT image of the received array means."""
    return vnt_forward(design.rx_moments.mean, design.vnt_params)
