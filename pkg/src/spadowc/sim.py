"""Monte Carlo BER, fading-averaged BER and achievable-rate search.

Randomness: every function takes an integer ``seed``. Sharded Monte Carlo
derives one child stream per shard from ``numpy.random.SeedSequence(seed)``,
so results do not depend on how many worker threads run the shards.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import decoder as dec
from .channel import TurbulenceParams, gg_params, gg_sample
from .constellation import (
    ConstellationDesign,
    Scheme,
    design,
    joint_offset,
    predistortion_offset,
    separation_many,
    sqrt_transformed_means,
)
from .errors import DesignError, DomainError, InfeasibleLinkError, ModelDomainError
from .linkmodel import LinkBudget, ModulationConfig, SpadArrayParams, peak_rate_bound
from .spad import GaussianMoments, dead_time_theta, single_pixel_mean, single_pixel_variance
from .vnt import VntParams, vnt_forward, vnt_inverse

DEFAULT_SYMBOLS = 1_000_000
DEFAULT_REALIZATIONS = 10_000
SHARD_SYMBOLS = 1_000_000
Z95 = 1.959963984540054


@dataclass(frozen=True)
class BerResult:
    ber: float
    bit_errors: int
    bits_simulated: int
    half_width_95: float

    @classmethod
    def from_counts(cls, bit_errors: int, bits: int) -> "BerResult":
        p = bit_errors / bits
        return cls(p, int(bit_errors), int(bits), Z95 * math.sqrt(p * (1.0 - p) / bits))

    @property
    def std_error(self) -> float:
        return self.half_width_95 / Z95


@dataclass(frozen=True)
class FadingBerResult:
    """Average of instantaneous analytical BERs over channel realizations."""

    ber: float
    realizations: int
    half_width_95: float
    infeasible_fraction: float = 0.0


@dataclass(frozen=True)
class RateSearchResult:
    rate: float
    symbol_duration: float
    scheme: Scheme
    met_target: bool
    ber: float = float("nan")


# ---------------------------------------------------------------------------
# receivers

DEFAULT_MODE = {
    Scheme.UNIFORM: "ml",
    Scheme.SQRT: "sqrt",
    Scheme.PRE_DISTORTION: "ml",
    Scheme.JOINT: "vnt",
}


def make_receiver(d: ConstellationDesign, mode: str | None = None) -> dec.Receiver:
    """Receiver for a design.

    Modes: ``"ml"`` photocount-domain ML thresholds; ``"sqrt"`` square-root
    map with thresholds from square-root domain moments; ``"vnt"`` VNT map with
    midpoint thresholds between ``m d + xi`` (AWGN approximation, joint only).
    """
    mode = mode or DEFAULT_MODE[d.scheme]
    if mode == "ml":
        if np.all(d.rx_moments.variance == 0.0):
            # noiseless levels: any threshold between the means is optimal
            t = dec.midpoint_thresholds(d.rx_moments.mean, dec.Domain.PHOTOCOUNT)
        else:
            t = dec.ml_thresholds(d.rx_moments)
        return dec.Receiver(dec.identity_transform, dec.identity_transform, t, "ml")
    if mode == "sqrt":
        tm = d.transformed_means
        if tm is None:
            tm = np.sqrt(d.rx_moments.mean)
        m = dec.sqrt_domain_moments(d.rx_moments, tm)
        t = dec.ml_thresholds(m, dec.Domain.SQRT)
        return dec.Receiver(dec.sqrt_transform, np.square, t, "sqrt")
    if mode == "vnt":
        if d.scheme is not Scheme.JOINT:
            raise DomainError("VNT midpoint decoding applies to the joint scheme")
        vp = d.vnt_params
        t = dec.midpoint_thresholds(d.transformed_means, dec.Domain.VNT)
        return dec.Receiver(
            lambda r: vnt_forward(r, vp), lambda y: vnt_inverse(y, vp), t, "vnt"
        )
    raise DomainError(f"unknown decoding mode {mode!r}")


def analytical_ber(d: ConstellationDesign, mode: str | None = None) -> float:
    """Closed-form BER of a design under its (or the given) decoding mode.

    ``"vnt"`` uses the AWGN expression with unit noise; ``"vnt_exact"``
    evaluates the VNT-midpoint receiver exactly, equal to its Monte Carlo
    expectation.
    """
    mode = mode or DEFAULT_MODE[d.scheme]
    if mode == "ml":
        return dec.ber_analytical_sdn(d.rx_moments, dec.ml_thresholds(d.rx_moments))
    if mode == "sqrt":
        m = dec.sqrt_domain_moments(d.rx_moments, d.transformed_means)
        return dec.ber_analytical_sdn(m, dec.ml_thresholds(m, dec.Domain.SQRT))
    if mode == "vnt":
        return dec.ber_analytical_awgn(d.separation, d.order)
    if mode == "vnt_exact":
        return dec.ber_exact(d.rx_moments, make_receiver(d, "vnt"))
    if mode == "appendix":
        return dec.ber_analytical_appendix(d.rx_moments)
    raise DomainError(f"unknown decoding mode {mode!r}")


# ---------------------------------------------------------------------------
# Monte Carlo

def _shard_errors(moments: GaussianMoments, receiver: dec.Receiver, n: int, rng: np.random.Generator) -> int:
    order = len(moments)
    sent = rng.integers(0, order, size=n)
    r = rng.normal(moments.mean[sent], moments.std[sent])
    got = receiver(r)
    return dec.bit_errors(sent, got)


def run_ber_mc(
    d: ConstellationDesign,
    receiver: dec.Receiver | None = None,
    n_symbols: int = DEFAULT_SYMBOLS,
    seed: int = 0,
    workers: int | None = None,
    shard_symbols: int = SHARD_SYMBOLS,
) -> BerResult:
    """Monte Carlo BER of a design with Gaussian array photocounts.

    ``workers=None`` runs the single-stream reference mode (one generator,
    consumed shard after shard). Any integer runs the sharded mode, where
    shard ``k`` uses the ``k``-th child of ``SeedSequence(seed)``; its result
    is identical for every worker count.
    """
    if n_symbols < 10_000:
        raise DomainError("n_symbols must be at least 1e4")
    receiver = receiver or make_receiver(d)
    sizes = [shard_symbols] * (n_symbols // shard_symbols)
    if n_symbols % shard_symbols:
        sizes.append(n_symbols % shard_symbols)
    moments = d.rx_moments
    if workers is None:
        rng = np.random.default_rng(seed)
        errors = sum(_shard_errors(moments, receiver, n, rng) for n in sizes)
    else:
        children = np.random.SeedSequence(seed).spawn(len(sizes))
        jobs = [(n, np.random.default_rng(c)) for n, c in zip(sizes, children)]
        with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
            errors = sum(pool.map(lambda job: _shard_errors(moments, receiver, *job), jobs))
    bits = n_symbols * int(math.log2(len(moments)))
    return BerResult.from_counts(errors, bits)


# ---------------------------------------------------------------------------
# fading

def _moments_from_lambda(lam, spad: SpadArrayParams, ts: float):
    mu = spad.n_pixels * single_pixel_mean(lam, ts, spad.dead_time)
    var = spad.n_pixels * single_pixel_variance(lam, ts, spad.dead_time)
    return mu, var


def instantaneous_ber_many(
    scheme: Scheme,
    losses,
    link: LinkBudget,
    spad: SpadArrayParams,
    mod: ModulationConfig,
    mode: str | None = None,
) -> np.ndarray:
    """Analytical BER for each channel loss with the design re-optimised per loss."""
    scheme = Scheme(scheme)
    mode = mode or DEFAULT_MODE[scheme]
    losses = np.asarray(losses, dtype=float)
    order, ts = mod.order, mod.symbol_duration
    m = np.arange(order)
    # the sign of the peak bound does not depend on the loss
    try:
        peak_rate_bound(link.with_loss(1.0), spad)
    except InfeasibleLinkError:
        return np.full(losses.shape, 0.5)
    hv = link.photon_energy
    peak = spad.n_pixels / (losses * spad.dead_time * spad.pde) - link.background_rate / losses
    if scheme in (Scheme.UNIFORM, Scheme.SQRT):
        if scheme is Scheme.UNIFORM:
            d = np.minimum(2.0 * link.avg_power_limit / (hv * (order - 1)), peak / (order - 1))
            rates = d[:, None] * m
        else:
            d = np.minimum(
                6.0 * link.avg_power_limit / (hv * (order - 1) * (2 * order - 1)), peak / (order - 1) ** 2
            )
            rates = d[:, None] * m**2
        lam = spad.pde * (losses[:, None] * rates + link.background_rate) / spad.n_pixels
        mu, var = _moments_from_lambda(lam, spad, ts)
        if scheme is Scheme.SQRT and mode == "sqrt":
            tm = sqrt_transformed_means(lam, spad.n_pixels, ts, spad.dead_time)
            tv = dec.sqrt_domain_variance(mu, np.sqrt(var), method="quadrature")
            return dec.ber_ml_many(tm, tv)
        return dec.ber_ml_many(mu, var)
    d, _ = separation_many(scheme, losses, link, spad, mod)
    if scheme is Scheme.JOINT and mode == "vnt":
        return (2 * order - 2) / (order * math.log2(order)) * dec.q_function(d / 2.0)
    theta = dead_time_theta(ts, spad.dead_time)
    if scheme is Scheme.PRE_DISTORTION:
        mu = d[:, None] * m + predistortion_offset(link, spad, ts)
    else:
        vp = VntParams(spad.n_pixels, theta)
        y = np.minimum(d[:, None] * m + joint_offset(link, spad, ts), vp.half_range)
        mu = vnt_inverse(y, vp)
    var = mu - theta * mu**2 / spad.n_pixels
    return dec.ber_ml_many(mu, var)


def run_ber_fading(
    t: TurbulenceParams,
    scheme: Scheme,
    link: LinkBudget,
    spad: SpadArrayParams,
    mod: ModulationConfig,
    n_realizations: int = DEFAULT_REALIZATIONS,
    seed: int = 0,
    mode: str | None = None,
) -> FadingBerResult:
    """Average BER over Gamma-Gamma fading with per-realization redesign.

    The transmitter is assumed to know each realization's loss
    ``alpha = h_f h_g``; ``link.loss`` is ignored.
    """
    if n_realizations < 100:
        raise DomainError("n_realizations must be at least 100")
    zeta, beta = gg_params(t)
    rng = np.random.default_rng(seed)
    alphas = gg_sample(zeta, beta, rng, n_realizations) * t.geometric_loss
    alphas = np.minimum(alphas, 1.0)
    bers = instantaneous_ber_many(scheme, alphas, link, spad, mod, mode)
    infeasible = float(np.mean(bers == 0.5))
    hw = Z95 * float(bers.std(ddof=1)) / math.sqrt(n_realizations)
    return FadingBerResult(float(bers.mean()), n_realizations, hw, infeasible)


# ---------------------------------------------------------------------------
# rate search

RATE_MODE = {
    Scheme.UNIFORM: "ml",
    Scheme.SQRT: "sqrt",
    Scheme.PRE_DISTORTION: "ml",
    Scheme.JOINT: "vnt_exact",
}


def default_rate_grid(lo: float = 10e6, hi: float = 2.5e9, step: float = 0.02) -> np.ndarray:
    """Geometric grid ``lo * (1 + step)^k`` up to ``hi``."""
    n = int(math.floor(math.log(hi / lo) / math.log1p(step))) + 1
    return lo * (1.0 + step) ** np.arange(n)


def search_max_rate(
    scheme: Scheme,
    link: LinkBudget,
    spad: SpadArrayParams,
    ber_target: float,
    rate_grid=None,
    order: int = 4,
    seed: int = 0,
    mode: str | None = None,
) -> RateSearchResult:
    """Largest grid rate whose BER meets ``ber_target``.

    The joint scheme is scored with VNT-domain midpoint decoding evaluated
    exactly; the square-root scheme uses Monte Carlo variances seeded from
    ``seed``.
    """
    scheme = Scheme(scheme)
    grid = default_rate_grid() if rate_grid is None else np.asarray(rate_grid, dtype=float)
    if np.any(np.diff(grid) <= 0.0):
        raise DomainError("rate grid must be strictly increasing")
    mode = mode or RATE_MODE[scheme]
    bits = int(math.log2(order))
    # scan downwards: the first rate meeting the target is the largest one
    for rate in grid[::-1]:
        mod = ModulationConfig(order, bits / rate)
        try:
            dsg = design(scheme, link, spad, mod)
        except (DesignError, ModelDomainError):
            continue
        if mode == "sqrt":
            m = dec.sqrt_domain_moments(dsg.rx_moments, dsg.transformed_means, seed=dec.SQRT_MC_SEED + seed)
            ber = dec.ber_analytical_sdn(m, dec.ml_thresholds(m, dec.Domain.SQRT))
        else:
            ber = analytical_ber(dsg, mode)
        if ber <= ber_target:
            return RateSearchResult(float(rate), bits / float(rate), scheme, True, ber)
    return RateSearchResult(float(grid[0]), bits / float(grid[0]), scheme, False)

__all__ = [
    "BerResult",
    "FadingBerResult",
    "RateSearchResult",
    "analytical_ber",
    "default_rate_grid",
    "instantaneous_ber_many",
    "make_receiver",
    "run_ber_fading",
    "run_ber_mc",
    "search_max_rate",
]
