import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from spadowc import decoder as dec
from spadowc.constellation import design_uniform
from spadowc.errors import OrderingError
from spadowc.mathfn import q_function
from spadowc.spad import GaussianMoments


def npdf(x, mu, var):
    return math.exp(-((x - mu) ** 2) / (2 * var)) / math.sqrt(2 * math.pi * var)


def test_gray_adjacent_one_bit():
    for order in (2, 4, 8, 16):
        m = np.arange(order - 1)
        assert np.all(dec._popcount(dec.gray_code(m) ^ dec.gray_code(m + 1)) == 1)
        assert len(set(dec.gray_code(np.arange(order)).tolist())) == order


def test_bit_errors():
    assert dec.bit_errors([0, 1, 2, 3], [0, 1, 2, 3]) == 0
    assert dec.bit_errors([0], [3]) == 1  # Gray 00 vs 10
    assert dec.bit_errors([0], [2]) == 2  # 00 vs 11


def test_ml_equal_variance_midpoint():
    m = GaussianMoments(np.array([1.0, 5.0]), np.array([2.0, 2.0]))
    assert dec.ml_thresholds(m).thresholds[0] == 3.0


def test_ml_density_equality_fig4(link60, spad, mod4):
    m = design_uniform(link60, spad, mod4).rx_moments
    t = dec.ml_thresholds(m).thresholds
    for k, th in enumerate(t):
        a = npdf(th, m.mean[k], m.variance[k])
        b = npdf(th, m.mean[k + 1], m.variance[k + 1])
        assert a == pytest.approx(b, rel=1e-9)


def _spad_pairs(rng, n, theta=1.0, pixels=2048, ts_over_td=0.5):
    top = pixels * ts_over_td / math.e  # saturation mean
    mu = np.sort(rng.uniform(0.5, top, (n, 2)), axis=1)
    mu[:, 1] += 1e-3
    var = mu - theta * mu**2 / pixels
    return mu[:, 0], var[:, 0], mu[:, 1], var[:, 1]


def test_ml_random_pairs_inside(rng):
    for theta, r in ((1.0, 0.5), (0.75, 2.0)):
        mu0, v0, mu1, v1 = _spad_pairs(rng, 1000, theta, ts_over_td=r)
        th, minus_used, no_crossing = dec.ml_threshold_pairs(mu0, v0, mu1, v1)
        assert np.all((th > mu0) & (th < mu1))
        assert not minus_used.any()
        # independent criterion: the narrower density wins at both means
        lp = lambda x, m, v: -((x - m) ** 2) / (2 * v) - 0.5 * np.log(v)  # noqa: E731
        d_lo = lp(mu0, mu0, v0) - lp(mu0, mu1, v1)
        d_hi = lp(mu1, mu0, v0) - lp(mu1, mu1, v1)
        assert np.array_equal(no_crossing, (d_lo > 0) == (d_hi > 0))


@settings(max_examples=200)
@given(st.floats(0.5, 370.0), st.floats(1e-2, 300.0))
def test_ml_density_equality_property(mu0, gap):
    mu1 = mu0 + gap
    v0, v1 = mu0 - mu0**2 / 2048, mu1 - mu1**2 / 2048
    th, _, no_crossing = dec.ml_threshold_pairs(mu0, v0, mu1, v1)
    th = float(th)
    assert mu0 < th < mu1
    if no_crossing:
        return
    lhs = -((th - mu0) ** 2) / (2 * v0) - 0.5 * math.log(v0)
    rhs = -((th - mu1) ** 2) / (2 * v1) - 0.5 * math.log(v1)
    assert abs(lhs - rhs) <= 1e-9 * max(1.0, abs(lhs))


def test_ml_no_root_between_means():
    # overlapping low-count levels: the narrow density dominates at both means
    m = GaussianMoments(np.array([1.0, 1.5]), np.array([1.0, 1.5]))
    with pytest.warns(RuntimeWarning, match="no density crossing"):
        t = dec.ml_thresholds(m)
    assert t.thresholds[0] == pytest.approx(dec.approx_thresholds(m).thresholds[0])


def test_ml_scale_equivariance():
    m = GaussianMoments(np.array([30.0, 110.0, 230.0]), np.array([30.0, 100.0, 200.0]))
    c = 3.7
    m2 = GaussianMoments(c * m.mean, c * c * m.variance)
    assert np.allclose(dec.ml_thresholds(m2).thresholds, c * dec.ml_thresholds(m).thresholds, rtol=1e-12)


def test_ordering_error():
    with pytest.raises(OrderingError):
        dec.ml_thresholds(GaussianMoments(np.array([2.0, 1.0]), np.array([1.0, 1.0])))
    with pytest.raises(OrderingError):
        dec.ThresholdSet(np.array([2.0, 1.0]))


def test_approx_thresholds(link60, spad, mod4):
    m = GaussianMoments(np.array([0.0, 10.0]), np.array([4.0, 4.0]))
    assert dec.approx_thresholds(m).thresholds[0] == 5.0
    m = GaussianMoments(np.array([0.0, 10.0]), np.array([4.0, 1e-20]))
    assert dec.approx_thresholds(m).thresholds[0] == pytest.approx(10.0)
    m = design_uniform(link60, spad, mod4).rx_moments
    gaps = np.diff(m.mean)
    diff = np.abs(dec.approx_thresholds(m).thresholds - dec.ml_thresholds(m).thresholds)
    assert np.all(diff <= 0.02 * gaps)


def test_decode_ties():
    t = dec.ThresholdSet(np.array([1.0, 2.0, 3.0]))
    assert dec.decode(-10.0, t) == 0
    assert dec.decode(10.0, t) == 3
    assert dec.decode(1.0, t) == 1
    assert np.array_equal(dec.decode(np.array([0.5, 2.0, 2.5]), t), [0, 2, 2])


def test_ber_sdn_reductions():
    m = GaussianMoments(np.array([0.0, 3.0]), np.array([1.0, 1.0]))
    t = dec.ml_thresholds(m)
    assert dec.ber_analytical_sdn(m, t) == pytest.approx(q_function(1.5), rel=1e-14)
    far = GaussianMoments(np.array([0.0, 1e3, 2e3, 3e3]), np.ones(4))
    assert dec.ber_analytical_sdn(far, dec.ml_thresholds(far)) < 1e-300


def test_ber_awgn():
    assert dec.ber_analytical_awgn(1e-300, 4) == pytest.approx(6 / 16)
    assert dec.ber_analytical_awgn(8.6, 4) == pytest.approx(0.75 * q_function(4.3), rel=1e-14)


def test_ber_sdn_quadrature_oracle(link60, spad, mod4):
    m = design_uniform(link60, spad, mod4).rx_moments
    t = dec.ml_thresholds(m).thresholds
    total = 0.0
    for k in range(3):
        lo = integrate.quad(lambda x: npdf(x, m.mean[k], m.variance[k]), t[k], np.inf)[0]
        up = integrate.quad(lambda x: npdf(x, m.mean[k + 1], m.variance[k + 1]), -np.inf, t[k])[0]
        total += lo + up
    assert dec.ber_analytical_sdn(m, dec.ThresholdSet(t)) == pytest.approx(total / 8, rel=1e-8)


def test_appendix_identity_and_closeness(link60, spad, mod4):
    m = design_uniform(link60, spad, mod4).rx_moments
    a = dec.ber_analytical_appendix(m)
    assert a == pytest.approx(dec.ber_analytical_sdn(m, dec.approx_thresholds(m)), rel=1e-13)
    assert a == pytest.approx(dec.ber_analytical_sdn(m, dec.ml_thresholds(m)), rel=0.10)


def test_ber_ml_many_matches_scalar(link60, spad, mod4):
    m = design_uniform(link60, spad, mod4).rx_moments
    batch = dec.ber_ml_many(np.stack([m.mean, 2 * m.mean]), np.stack([m.variance, 4 * m.variance]))
    assert batch[0] == pytest.approx(dec.ber_analytical_sdn(m, dec.ml_thresholds(m)), rel=1e-14)
    assert batch[1] == pytest.approx(batch[0], rel=1e-12)


def test_sqrt_variance_methods_agree():
    mean = np.array([35.0, 120.0, 400.0])
    std = np.sqrt(np.array([33.0, 110.0, 300.0]))
    mc = dec.sqrt_domain_variance(mean, std, "mc", 10**5)
    quad = dec.sqrt_domain_variance(mean, std, "quadrature")
    assert np.allclose(mc, quad, rtol=0.02)
    # delta method: var(sqrt r) ~ var / (4 mean)
    assert np.allclose(quad, std**2 / (4 * mean), rtol=0.05)


def test_ber_exact_matches_monte_carlo(rng):
    m = GaussianMoments(np.array([10.0, 25.0, 45.0, 70.0]), np.array([10.0, 22.0, 38.0, 55.0]))
    rx = dec.Receiver(dec.sqrt_transform, np.square, dec.midpoint_thresholds(np.sqrt(m.mean), dec.Domain.SQRT))
    exact = dec.ber_exact(m, rx)
    n = 400000
    sent = rng.integers(0, 4, n)
    got = rx(rng.normal(m.mean[sent], m.std[sent]))
    ber = dec.bit_errors(sent, got) / (2 * n)
    se = math.sqrt(exact * (1 - exact) / (2 * n))
    assert abs(ber - exact) <= 3 * se


def test_symbol_error_matrix_rows_sum_to_one():
    m = GaussianMoments(np.array([0.0, 5.0, 9.0]), np.array([1.0, 0.0, 2.0]))
    p = dec.symbol_error_matrix(m, np.array([2.5, 7.0]))
    assert np.allclose(p.sum(axis=1), 1.0)
    assert np.array_equal(p[1], [0.0, 1.0, 0.0])
    assert p[0, 0] == pytest.approx(stats.norm.cdf(2.5))
