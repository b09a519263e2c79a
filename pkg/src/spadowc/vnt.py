"""Variance-normalizing transform (VNT) for SPAD array photocounts.

For ``var = mu - (theta/N) mu^2`` the map
``T(x) = -sqrt(N/theta) * arcsin(1 - 2 theta x / N)`` has derivative
``1/sqrt(var(x))``, so ``T(r)`` has roughly unit variance at every level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .spad import dead_time_theta


@dataclass(frozen=True)
class VntParams:
    n_pixels: int
    theta: float
    scale: float = field(init=False)

    def __post_init__(self):
        if not 0.0 < self.theta <= 1.0:
            raise DomainError("theta must lie in (0, 1]")
        if self.n_pixels < 1:
            raise DomainError("n_pixels must be positive")
        object.__setattr__(self, "scale", math.sqrt(self.n_pixels / self.theta))

    @classmethod
    def for_link(cls, n_pixels: int, ts: float, td: float) -> "VntParams":
        return cls(n_pixels, dead_time_theta(ts, td))

    @property
    def upper(self) -> float:
        """Right end N/theta of the photocount domain."""
        return self.n_pixels / self.theta

    @property
    def half_range(self) -> float:
        """Output range is [-half_range, +half_range]."""
        return self.scale * math.pi / 2.0


def vnt_forward(r, p: VntParams):
    """Apply the VNT after clipping ``r`` to ``[0, N/theta]``."""
    r = np.clip(np.asarray(r, dtype=float), 0.0, p.upper)
    arg = np.clip(1.0 - 2.0 * r / p.upper, -1.0, 1.0)
    y = -p.scale * np.arcsin(arg)
    return float(y) if y.ndim == 0 else y


def vnt_inverse(y, p: VntParams):
    """Inverse VNT, ``(N / 2 theta) * (1 + sin(y / scale))``."""
    y = np.asarray(y, dtype=float)
    # allow a few ulps beyond the endpoints
    slack = 1e-12 * p.half_range
    if np.any(np.abs(y) > p.half_range + slack):
        raise DomainError("vnt_inverse argument outside the principal range")
    x = 0.5 * p.upper * (1.0 + np.sin(np.clip(y, -p.half_range, p.half_range) / p.scale))
    return float(x) if x.ndim == 0 else x
