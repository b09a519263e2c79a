"""Channel loss models: FSO (geometric spread + Gamma-Gamma fading) and VLC LOS."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate, special

from .errors import DomainError
from .mathfn import log_bessel_k, sample_gamma


@dataclass(frozen=True)
class TurbulenceParams:
    """Atmospheric path description for a ground FSO link.

    ``vartheta2_turb`` is the aperture parameter ``k phi^2 / (4 L)`` (not to
    be confused with the dead-time parameter ``theta`` of the VNT).
    """

    cn2: float = 1e-15
    distance: float = 1500.0
    aperture: float = 0.10
    divergence: float = 2e-3
    wavelength: float = 785e-9

    def __post_init__(self):
        for name in ("cn2", "distance", "aperture", "divergence", "wavelength"):
            if not getattr(self, name) > 0.0:
                raise DomainError(f"{name} must be positive")

    @property
    def wavenumber(self) -> float:
        return 2.0 * math.pi / self.wavelength

    @property
    def chi2(self) -> float:
        return 0.5 * self.cn2 * self.wavenumber ** (7.0 / 6.0) * self.distance ** (11.0 / 6.0)

    @property
    def vartheta2_turb(self) -> float:
        return self.wavenumber * self.aperture**2 / (4.0 * self.distance)

    @property
    def zeta(self) -> float:
        return gg_params(self)[0]

    @property
    def beta(self) -> float:
        return gg_params(self)[1]

    @property
    def geometric_loss(self) -> float:
        return fso_geometric_loss(self.aperture, self.divergence, self.distance)


def fso_geometric_loss(aperture: float, divergence: float, distance: float) -> float:
    """Fraction of a diverging Gaussian beam captured by the receive aperture."""
    if not (aperture > 0.0 and divergence > 0.0 and distance > 0.0):
        raise DomainError("aperture, divergence and distance must be positive")
    arg = math.sqrt(math.pi) * aperture / (2.0 * math.sqrt(2.0) * divergence * distance)
    return math.erf(arg) ** 2


def gg_params(t: TurbulenceParams) -> tuple[float, float]:
    """Gamma-Gamma shape parameters ``(zeta, beta)`` for an aperture-averaged link."""
    chi2 = t.chi2
    v2 = t.vartheta2_turb
    c = chi2 ** (6.0 / 5.0)  # chi^(12/5)
    x_zeta = 0.49 * chi2 / (1.0 + 0.18 * v2 + 0.56 * c) ** (7.0 / 6.0)
    x_beta = 0.51 * chi2 * (1.0 + 0.69 * c) ** (-5.0 / 6.0) / (1.0 + 0.9 * v2 + 0.62 * v2 * c) ** (5.0 / 6.0)
    with np.errstate(over="ignore"):
        em_z = np.expm1(x_zeta)
        em_b = np.expm1(x_beta)
    if not (np.isfinite(em_z) and np.isfinite(em_b)):
        raise DomainError(f"turbulence too strong for the Gamma-Gamma fit (chi2 = {chi2:.3g})")
    zeta = math.inf if em_z == 0.0 else 1.0 / float(em_z)
    beta = math.inf if em_b == 0.0 else 1.0 / float(em_b)
    return zeta, beta


def gg_pdf(x, zeta: float, beta: float):
    """Unit-mean Gamma-Gamma density evaluated in the log domain."""
    scalar = np.ndim(x) == 0
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(x <= 0.0):
        raise DomainError("Gamma-Gamma density is defined for x > 0")
    zb = zeta * beta
    nu = abs(zeta - beta)
    arg = 2.0 * np.sqrt(zb * x)
    k = special.kve(nu, arg)
    with np.errstate(divide="ignore"):
        log_k = np.log(k) - arg
    bad = ~np.isfinite(log_k)
    if bad.any():
        log_k[bad] = [log_bessel_k(nu, a) for a in arg[bad]]
    log_f = (
        math.log(2.0)
        + 0.5 * (zeta + beta) * math.log(zb)
        - special.gammaln(zeta)
        - special.gammaln(beta)
        + (0.5 * (zeta + beta) - 1.0) * np.log(x)
        + log_k
    )
    f = np.exp(log_f)
    return float(f[0]) if scalar else f


def gg_normalization(zeta: float, beta: float, tol: float = 1e-4) -> float:
    """Numerical integral of :func:`gg_pdf`; warns if it is not 1 within ``tol``."""
    # integrate in log x so both the spike near 0 and the tail are resolved
    def f(u):
        x = math.exp(u)
        return gg_pdf(x, zeta, beta) * x

    total = integrate.quad(f, -60.0, 0.0, limit=400)[0] + integrate.quad(f, 0.0, 8.0, limit=400)[0]
    if abs(total - 1.0) > tol:
        warnings.warn(f"Gamma-Gamma density integrates to {total:.6g}", RuntimeWarning, stacklevel=2)
    return total


def gg_sample(zeta: float, beta: float, rng: np.random.Generator, size=None):
    """Gamma-Gamma draws as the product of two unit-mean Gamma variates."""
    if not (zeta > 0.0 and beta > 0.0):
        raise DomainError("zeta and beta must be positive")
    out = np.ones(size) if size is not None else 1.0
    if math.isfinite(zeta):
        out = out * sample_gamma(zeta, 1.0 / zeta, rng, size)
    if math.isfinite(beta):
        out = out * sample_gamma(beta, 1.0 / beta, rng, size)
    return out


def fso_loss_draw(t: TurbulenceParams, rng: np.random.Generator, size=None):
    """Random FSO channel loss ``h_f * h_g``."""
    zeta, beta = gg_params(t)
    return gg_sample(zeta, beta, rng, size) * t.geometric_loss


def lambertian_intensity(order: float = 1.0) -> Callable[[float], float]:
    """Generalised Lambertian radiant intensity ``(n + 1)/(2 pi) cos^n``."""

    def ro(psi: float) -> float:
        return (order + 1.0) / (2.0 * math.pi) * math.cos(psi) ** order

    return ro


def unit_gain(psi: float) -> float:
    return 1.0


@dataclass(frozen=True)
class VlcGeometry:
    detector_area: float
    distance: float
    radiance_angle: float = 0.0
    incidence_angle: float = 0.0
    fov: float = math.pi / 2
    radiant_intensity_fn: Callable[[float], float] = lambertian_intensity(1.0)
    concentrator_gain_fn: Callable[[float], float] = unit_gain

    def __post_init__(self):
        if not (self.detector_area > 0.0 and self.distance > 0.0):
            raise DomainError("detector area and distance must be positive")


def vlc_los_loss(g: VlcGeometry) -> float:
    """Line-of-sight VLC channel gain ``A_d / L^2 R_o(psi_t) G(psi_r) cos(psi_r)``."""
    if abs(g.incidence_angle) > g.fov:
        raise DomainError("incidence angle outside the receiver field of view")
    gain = (
        g.detector_area
        / g.distance**2
        * g.radiant_intensity_fn(g.radiance_angle)
        * g.concentrator_gain_fn(g.incidence_angle)
        * math.cos(g.incidence_angle)
    )
    return max(gain, 0.0)
