"""Link parameters and power / photon-rate bookkeeping.

Units are SI throughout: watts for optical power, photons per second for
rates, seconds for times and metres for lengths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import constants

from .errors import DomainError, InfeasibleLinkError


@dataclass(frozen=True)
class SpadArrayParams:
    """Passively quenched SPAD array.

    Attributes
    ----------
    n_pixels : int
        Number of pixels whose counts are summed.
    dead_time : float
        Paralyzable dead time in seconds.
    pde : float
        Photon detection efficiency in (0, 1].
    """

    n_pixels: int = 2048
    dead_time: float = 10e-9
    pde: float = 0.18

    def __post_init__(self):
        if int(self.n_pixels) != self.n_pixels or self.n_pixels < 1:
            raise DomainError(f"n_pixels must be a positive integer, got {self.n_pixels}")
        if not self.dead_time > 0.0:
            raise DomainError("dead_time must be positive")
        if not 0.0 < self.pde <= 1.0:
            raise DomainError("pde must lie in (0, 1]")


@dataclass(frozen=True)
class LinkBudget:
    """Channel loss, background light and transmitter power limit."""

    loss: float = 1e-3
    background_power: float = 10e-9
    avg_power_limit: float = 100e-6
    wavelength: float = 785e-9

    def __post_init__(self):
        if not 0.0 < self.loss <= 1.0:
            raise DomainError(f"loss must lie in (0, 1], got {self.loss}")
        if not self.background_power >= 0.0:
            raise DomainError("background_power must be non-negative")
        if not self.avg_power_limit > 0.0:
            raise DomainError("avg_power_limit must be positive")
        if not self.wavelength > 0.0:
            raise DomainError("wavelength must be positive")

    @property
    def photon_energy(self) -> float:
        """Energy of one photon, h c / wavelength, in joules."""
        return constants.h * constants.c / self.wavelength

    @property
    def background_rate(self) -> float:
        """Total background photon rate reaching the array (photons/s)."""
        return self.background_power / self.photon_energy

    def with_loss(self, loss: float) -> "LinkBudget":
        return LinkBudget(loss, self.background_power, self.avg_power_limit, self.wavelength)

    def with_power(self, avg_power_limit: float) -> "LinkBudget":
        return LinkBudget(self.loss, self.background_power, avg_power_limit, self.wavelength)


@dataclass(frozen=True)
class ModulationConfig:
    """PAM order and symbol duration."""

    order: int = 4
    symbol_duration: float = 5e-9

    def __post_init__(self):
        m = self.order
        if int(m) != m or m < 2 or (int(m) & (int(m) - 1)) != 0:
            raise DomainError(f"order must be a power of two >= 2, got {m}")
        if not self.symbol_duration > 0.0:
            raise DomainError("symbol_duration must be positive")

    @property
    def bits_per_symbol(self) -> int:
        return int(self.order).bit_length() - 1

    @property
    def bit_rate(self) -> float:
        return self.bits_per_symbol / self.symbol_duration


def db_to_linear_loss(loss_db: float) -> float:
    """Convert a positive attenuation in dB (e.g. 30) to a linear factor (1e-3)."""
    return 10.0 ** (-loss_db / 10.0)


def avg_transmit_power(rates, hv: float) -> float:
    """Average transmitted optical power of equiprobable levels (watts)."""
    rates = np.asarray(rates, dtype=float)
    if np.any(rates < 0.0):
        raise DomainError("transmit photon rates must be non-negative")
    return hv * float(np.mean(rates))


def per_pixel_rate(rate_tx, link: LinkBudget, spad: SpadArrayParams):
    """Photon rate incident on one pixel for transmit rate(s) ``rate_tx``.

    Signal and background are both attenuated by the pixel share ``1/N`` and
    scaled by the detection efficiency.
    """
    rate_tx = np.asarray(rate_tx, dtype=float)
    lam = spad.pde * (link.loss * rate_tx + link.background_rate) / spad.n_pixels
    return float(lam) if lam.ndim == 0 else lam


def peak_rate_bound(link: LinkBudget, spad: SpadArrayParams) -> float:
    """Largest transmit photon rate keeping every pixel at or below 1/T_d.

    Raises
    ------
    InfeasibleLinkError
        When background light alone already reaches the saturation point.
    """
    bound = (
        spad.n_pixels / (link.loss * spad.dead_time * spad.pde)
        - link.background_rate / link.loss
    )
    if not bound > 0.0 or not math.isfinite(bound):
        raise InfeasibleLinkError(
            f"background rate {link.background_rate:.4g}/s saturates the array "
            f"(peak transmit bound {bound:.4g}/s)"
        )
    return bound
