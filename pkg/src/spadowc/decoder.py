"""Threshold detection and analytical bit-error rates.

Levels carry Gray-coded bits, so a decision error between neighbouring
levels costs exactly one bit; the analytical expressions below count only
those nearest-neighbour errors.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError, NumericError, OrderingError
from .mathfn import q_function
from .spad import GaussianMoments

# relative tolerance below which two variances count as equal
EQUAL_VAR_RTOL = 1e-12

SQRT_MC_SAMPLES = 100_000
SQRT_MC_SEED = 20210531


class Domain(str, enum.Enum):
    PHOTOCOUNT = "photocount"
    VNT = "vnt"
    SQRT = "sqrt"


@dataclass(frozen=True)
class ThresholdSet:
    thresholds: np.ndarray
    domain: Domain = Domain.PHOTOCOUNT

    def __post_init__(self):
        t = np.asarray(self.thresholds, dtype=float)
        if t.ndim != 1:
            raise DomainError("thresholds must be a 1-D vector")
        if np.any(np.diff(t) <= 0.0):
            raise OrderingError("thresholds must be strictly increasing")
        object.__setattr__(self, "thresholds", t)

    @property
    def order(self) -> int:
        return self.thresholds.size + 1


def gray_code(m):
    m = np.asarray(m, dtype=np.int64)
    return m ^ (m >> 1)


def _popcount(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.uint64)
    return np.unpackbits(x.view(np.uint8).reshape(*x.shape, 8), axis=-1).sum(axis=-1)


def bit_errors(sent, decided) -> int:
    """Number of differing Gray-coded bits between two symbol streams."""
    diff = gray_code(sent) ^ gray_code(decided)
    return int(_popcount(diff).sum())


def _check_moments(mu, var):
    if np.any(np.diff(mu, axis=-1) <= 0.0):
        raise OrderingError("level means must be strictly increasing")
    if np.any(var <= 0.0):
        raise DomainError("level variances must be positive")


def ml_threshold_pairs(mu0, var0, mu1, var1):
    """Equal-likelihood points between Gaussian pairs (vectorised).

    For each pair the root of ``a x^2 - 2 b x + c = 0`` lying between the two
    means is returned; nearly equal variances use the midpoint. When the
    narrower density dominates at both means (strongly overlapping levels)
    no crossing lies between them and the sigma-weighted threshold
    ``(mu1 s0 + mu0 s1)/(s0 + s1)`` is used instead.

    Returns
    -------
    (thresholds, used_minus_root, no_crossing)
        ``used_minus_root`` flags pairs where the "+" root of the textbook
        formula falls outside the interval and the other root was taken;
        ``no_crossing`` flags pairs that took the sigma-weighted fallback.
    """
    mu0, var0, mu1, var1 = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (mu0, var0, mu1, var1)))
    a = 1.0 / var0 - 1.0 / var1
    b = mu0 / var0 - mu1 / var1
    c = mu0**2 / var0 - mu1**2 / var1 + np.log(var0 / var1)
    equal = np.abs(var0 - var1) <= EQUAL_VAR_RTOL * np.maximum(var0, var1)
    disc = b * b - a * c
    if np.any((disc < -1e-12 * b * b) & ~equal):
        raise NumericError("negative discriminant in ML threshold")
    sq = np.sqrt(np.maximum(disc, 0.0))
    # roots (b +- sq)/a computed without cancellation: q/a and c/q
    q = b + np.copysign(sq, b)
    with np.errstate(divide="ignore", invalid="ignore"):
        r_q = q / a
        r_c = c / q
    in_q = (r_q > mu0) & (r_q < mu1)
    in_c = (r_c > mu0) & (r_c < mu1)
    no_crossing = ~(in_q | in_c) & ~equal
    s0, s1 = np.sqrt(var0), np.sqrt(var1)
    weighted = (mu1 * s0 + mu0 * s1) / (s0 + s1)
    th = np.where(equal, 0.5 * (mu0 + mu1), np.where(in_q, r_q, np.where(in_c, r_c, weighted)))
    # r_q is the '+' root when b >= 0, r_c otherwise
    plus_is_q = b >= 0.0
    minus_used = ~equal & ~no_crossing & np.where(plus_is_q, ~in_q, in_q)
    return th, minus_used, no_crossing


def ml_thresholds(moments: GaussianMoments, domain: Domain = Domain.PHOTOCOUNT) -> ThresholdSet:
    """Maximum-likelihood thresholds between adjacent Gaussian levels."""
    mu, var = moments.mean, moments.variance
    _check_moments(mu, var)
    th, minus_used, no_crossing = ml_threshold_pairs(mu[:-1], var[:-1], mu[1:], var[1:])
    if np.any(minus_used):
        warnings.warn(
            f"ML threshold: '+' root outside the level interval for pairs {np.flatnonzero(minus_used).tolist()}; "
            "using the other root",
            RuntimeWarning,
            stacklevel=2,
        )
    if np.any(no_crossing):
        warnings.warn(
            f"ML threshold: no density crossing between the means of pairs {np.flatnonzero(no_crossing).tolist()}; "
            "using the sigma-weighted threshold",
            RuntimeWarning,
            stacklevel=2,
        )
    return ThresholdSet(th, domain)


def approx_thresholds(moments: GaussianMoments, domain: Domain = Domain.PHOTOCOUNT) -> ThresholdSet:
    """Standard-deviation weighted thresholds ``(mu1 s0 + mu0 s1)/(s0 + s1)``."""
    mu, var = moments.mean, moments.variance
    _check_moments(mu, var)
    s = np.sqrt(var)
    th = (mu[1:] * s[:-1] + mu[:-1] * s[1:]) / (s[:-1] + s[1:])
    return ThresholdSet(th, domain)


def midpoint_thresholds(means, domain: Domain = Domain.VNT) -> ThresholdSet:
    """Midpoints between adjacent means (equal-variance ML rule)."""
    means = np.asarray(means, dtype=float)
    return ThresholdSet(0.5 * (means[:-1] + means[1:]), domain)


def decode(r, t: ThresholdSet):
    """Symbol index for each observation; a value equal to a threshold goes up."""
    out = np.searchsorted(t.thresholds, r, side="right")
    return int(out) if np.ndim(out) == 0 else out


def _ber_sdn_arrays(mu, sd, th, order):
    lower = q_function((th - mu[..., :-1]) / sd[..., :-1])
    upper = q_function((mu[..., 1:] - th) / sd[..., 1:])
    return (lower + upper).sum(axis=-1) / (order * math.log2(order))


def ber_analytical_sdn(moments: GaussianMoments, t: ThresholdSet, order: int | None = None) -> float:
    """Nearest-neighbour BER for Gaussian levels with level-dependent noise."""
    order = len(moments) if order is None else order
    if t.thresholds.size != order - 1 or len(moments) != order:
        raise DomainError("moments, thresholds and order disagree")
    return float(_ber_sdn_arrays(moments.mean, moments.std, t.thresholds, order))


def ber_analytical_awgn(d: float, order: int) -> float:
    """PAM BER with unit-variance AWGN and level spacing ``d``."""
    if not d > 0.0:
        raise DomainError("separation must be positive")
    return (2 * order - 2) / (order * math.log2(order)) * q_function(d / 2.0)


def ber_analytical_appendix(moments: GaussianMoments, order: int | None = None) -> float:
    """BER with the sigma-weighted thresholds, in its closed form."""
    order = len(moments) if order is None else order
    mu, s = moments.mean, moments.std
    _check_moments(mu, moments.variance)
    z = (mu[1:] - mu[:-1]) / (s[1:] + s[:-1])
    return float(2.0 / (order * math.log2(order)) * np.sum(q_function(z)))


def ber_ml_many(mu, var):
    """Vectorised ML-threshold BER over leading axes; levels on the last axis."""
    mu = np.asarray(mu, dtype=float)
    var = np.asarray(var, dtype=float)
    order = mu.shape[-1]
    th, _, _ = ml_threshold_pairs(mu[..., :-1], var[..., :-1], mu[..., 1:], var[..., 1:])
    return _ber_sdn_arrays(mu, np.sqrt(var), th, order)


def sqrt_domain_variance(mean, std, method: str = "mc", samples: int = SQRT_MC_SAMPLES, seed: int = SQRT_MC_SEED):
    """Variance of ``sqrt(max(r, 0))`` for Gaussian ``r`` (vectorised).

    ``method="mc"`` uses ``samples`` common standard-normal draws from a
    dedicated seed; ``method="quadrature"`` uses 96-point Gauss-Hermite
    quadrature and is meant for large batches (fading averages).
    """
    mean = np.asarray(mean, dtype=float)
    std = np.asarray(std, dtype=float)
    if method == "mc":
        z = np.random.default_rng(seed).standard_normal(samples)
        r = mean[..., None] + std[..., None] * z
        return np.sqrt(np.maximum(r, 0.0)).var(axis=-1, ddof=1)
    if method == "quadrature":
        nodes, weights = np.polynomial.hermite_e.hermegauss(96)
        weights = weights / weights.sum()
        r = np.sqrt(np.maximum(mean[..., None] + std[..., None] * nodes, 0.0))
        m1 = (r * weights).sum(axis=-1)
        m2 = (r * r * weights).sum(axis=-1)
        return np.maximum(m2 - m1 * m1, 0.0)
    raise ValueError(f"unknown method {method!r}")


def sqrt_domain_moments(
    photocount: GaussianMoments,
    transformed_means,
    samples: int = SQRT_MC_SAMPLES,
    seed: int = SQRT_MC_SEED,
    method: str = "mc",
) -> GaussianMoments:
    """Moments of ``sqrt(r)`` for the square-root receiver.

    Means are the supplied closed-form approximations; variances come from
    :func:`sqrt_domain_variance` (Monte Carlo with a fixed seed by default).
    """
    var = sqrt_domain_variance(photocount.mean, photocount.std, method, samples, seed)
    return GaussianMoments(np.asarray(transformed_means, dtype=float), var)


@dataclass(frozen=True)
class Receiver:
    """Monotone receiver map followed by threshold slicing.

    ``inverse`` maps thresholds back to the photocount domain, which makes
    the exact error probabilities of the receiver computable.
    """

    transform: Callable[[np.ndarray], np.ndarray]
    inverse: Callable[[np.ndarray], np.ndarray]
    thresholds: ThresholdSet
    name: str = ""

    def __call__(self, r):
        return decode(self.transform(r), self.thresholds)

    def photocount_thresholds(self) -> np.ndarray:
        return np.asarray(self.inverse(self.thresholds.thresholds), dtype=float)


def sqrt_transform(r):
    return np.sqrt(np.maximum(r, 0.0))


def identity_transform(r):
    return r


def symbol_error_matrix(moments: GaussianMoments, photocount_thresholds) -> np.ndarray:
    """``P[i, j]``: probability of deciding level ``j`` when ``i`` was sent."""
    t = np.concatenate(([-np.inf], np.asarray(photocount_thresholds, dtype=float), [np.inf]))
    mu = moments.mean[:, None]
    sd = moments.std[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        z = (t[None, :] - mu) / sd
    # zero variance: decision is deterministic (ties go up)
    z = np.where(sd == 0.0, np.where(t[None, :] > mu, np.inf, -np.inf), z)
    cdf = 1.0 - q_function(z)
    return np.diff(cdf, axis=1)


def ber_exact(moments: GaussianMoments, receiver: Receiver) -> float:
    """Expected Gray-coded BER of ``receiver`` for Gaussian photocounts.

    Counts every decision error (not only nearest neighbours) and is the
    exact expectation of the Monte Carlo estimate.
    """
    order = len(moments)
    p = symbol_error_matrix(moments, receiver.photocount_thresholds())
    m = np.arange(order)
    bits = _popcount(gray_code(m)[:, None] ^ gray_code(m)[None, :])
    return float((p * bits).sum() / (order * math.log2(order)))
