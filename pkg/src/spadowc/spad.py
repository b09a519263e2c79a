"""Detection statistics of a passively quenched (paralyzable) SPAD array.

The array output for a constant per-pixel photon rate is modelled as a
Gaussian with the summed moments of the individual sub-Poisson pixels.
:func:`dead_time_oracle` simulates photon arrivals event by event and serves
as an independent check on the closed-form moments.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ModelDomainError
from .linkmodel import SpadArrayParams


@dataclass(frozen=True)
class GaussianMoments:
    """Per-level mean and variance of a Gaussian observation.

    ``mean`` and ``variance`` are arrays of equal shape (scalars allowed).
    Used for photocounts as well as for transformed (square-root or VNT)
    receiver signals.
    """

    mean: np.ndarray
    variance: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        var = np.asarray(self.variance, dtype=float)
        if mean.shape != var.shape:
            raise DomainError("mean and variance must have the same shape")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(var))):
            raise ModelDomainError("moments must be finite")
        if np.any(var < 0.0):
            raise ModelDomainError("negative variance: operating point outside [0, N/theta)")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "variance", var)

    @property
    def std(self) -> np.ndarray:
        return np.sqrt(self.variance)

    def __len__(self):
        return self.mean.size


@dataclass(frozen=True)
class DeadTimeRegime:
    """Dead-time regime parameter of the variance law ``var = mu - theta mu^2``."""

    theta: float

    @classmethod
    def from_times(cls, ts: float, td: float) -> "DeadTimeRegime":
        return cls(dead_time_theta(ts, td))

    def __post_init__(self):
        if not 0.0 < self.theta <= 1.0:
            raise DomainError("theta must lie in (0, 1]")


def dead_time_theta(ts: float, td: float) -> float:
    """``1 - ((1 - td/ts)^+)^2``; equals 1 whenever ``ts <= td``."""
    if not (ts > 0.0 and td > 0.0):
        raise DomainError("symbol duration and dead time must be positive")
    return 1.0 - max(1.0 - td / ts, 0.0) ** 2


def single_pixel_mean(lam, ts: float, td: float):
    """Mean detected count of one pixel over a window ``ts``."""
    lam = np.asarray(lam, dtype=float)
    if np.any(lam < 0.0):
        raise DomainError("photon rate must be non-negative")
    mu = lam * ts * np.exp(-lam * td)
    return float(mu) if mu.ndim == 0 else mu


def single_pixel_variance(lam, ts: float, td: float):
    """Variance of the single-pixel count; exact Bernoulli law when ts <= td."""
    mu = np.asarray(single_pixel_mean(lam, ts, td))
    if ts <= td:
        var = mu - mu**2
    else:
        var = mu - mu**2 * (1.0 - (1.0 - td / ts) ** 2)
    return float(var) if var.ndim == 0 else var


def array_moments(lam, spad: SpadArrayParams, ts: float) -> GaussianMoments:
    """Moments of the summed photocount of ``spad.n_pixels`` identical pixels."""
    n = spad.n_pixels
    mu = n * np.asarray(single_pixel_mean(lam, ts, spad.dead_time))
    var = n * np.asarray(single_pixel_variance(lam, ts, spad.dead_time))
    theta = dead_time_theta(ts, spad.dead_time)
    if np.any(mu >= n / theta):
        raise ModelDomainError("array mean must stay below N/theta")
    return GaussianMoments(mu, var)


def sample_output(moments: GaussianMoments, rng: np.random.Generator, size=None):
    """Real-valued Gaussian photocount draws (no rounding, no truncation)."""
    return rng.normal(moments.mean, moments.std, size=size)


def dead_time_oracle(
    lam: float,
    ts: float,
    td: float,
    windows: int,
    rng: np.random.Generator,
    chunk_windows: int = 200_000,
    return_counts: bool = False,
):
    """Event-level simulation of a paralyzable pixel.

    Poisson arrivals at rate ``lam`` are generated on a continuous time axis;
    an arrival is counted iff the gap to the previous arrival exceeds ``td``.
    The axis starts with enough discarded warm-up windows to cover one dead
    time, so every counted window sees the steady-state process.

    Returns
    -------
    (mean, variance)
        Sample mean and unbiased sample variance of counts per window.
        With ``return_counts=True`` the per-window counts are appended as a
        third element.
    """
    if windows < 1:
        raise DomainError("windows must be >= 1")
    warm = int(np.ceil(td / ts)) + 1
    counts = np.empty(windows, dtype=np.int64)
    done = 0
    last_arrival = -np.inf
    t0 = 0.0
    # first chunk includes the warm-up windows
    while done < windows:
        n_win = min(chunk_windows, windows - done)
        span_windows = n_win + (warm if done == 0 else 0)
        span = span_windows * ts
        n_arr = rng.poisson(lam * span)
        times = t0 + np.sort(rng.uniform(0.0, span, size=n_arr))
        prev = np.concatenate(([last_arrival], times[:-1])) if n_arr else np.empty(0)
        detected = times[(times - prev) > td]
        start = t0 + (warm * ts if done == 0 else 0.0)
        idx = np.floor((detected - start) / ts).astype(np.int64)
        idx = idx[(idx >= 0) & (idx < n_win)]
        counts[done:done + n_win] = np.bincount(idx, minlength=n_win)
        if n_arr:
            last_arrival = times[-1]
        t0 += span
        done += n_win
    mean = float(counts.mean())
    var = float(counts.var(ddof=1)) if windows > 1 else 0.0
    if return_counts:
        return mean, var, counts
    return mean, var
