import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spadowc.errors import ModelDomainError
from spadowc.linkmodel import SpadArrayParams
from spadowc.spad import (
    DeadTimeRegime,
    GaussianMoments,
    array_moments,
    dead_time_oracle,
    dead_time_theta,
    sample_output,
    single_pixel_mean,
    single_pixel_variance,
)

TD = 10e-9


def test_theta_regimes():
    assert dead_time_theta(5e-9, TD) == 1.0
    assert dead_time_theta(TD, TD) == 1.0
    assert dead_time_theta(20e-9, TD) == pytest.approx(0.75)
    assert DeadTimeRegime.from_times(40e-9, TD).theta == pytest.approx(1 - 0.75**2)


def test_mean_examples():
    assert single_pixel_mean(0.0, 20e-9, TD) == 0.0
    assert single_pixel_mean(1 / TD, 20e-9, TD) == pytest.approx(2 * math.exp(-1))


def test_mean_unique_max_at_saturation():
    lam = np.linspace(1e6, 5e8, 200001)
    mu = single_pixel_mean(lam, 5e-9, TD)
    assert lam[np.argmax(mu)] == pytest.approx(1 / TD, rel=1e-3)
    k = np.argmax(mu)
    assert np.all(np.diff(mu[: k + 1]) > 0) and np.all(np.diff(mu[k:]) < 0)


def test_variance_branches_continuous():
    lam = np.linspace(0, 3e8, 50)
    a = single_pixel_variance(lam, TD, TD)
    b = single_pixel_variance(lam, TD * (1 + 1e-12), TD)
    assert np.allclose(a, b, rtol=1e-9, atol=1e-15)
    assert single_pixel_variance(0.0, 5e-9, TD) == 0.0


@given(st.floats(0, 1e9), st.sampled_from([2e-9, 5e-9, 10e-9, 20e-9, 80e-9]))
def test_sub_poisson_identity(lam, ts):
    mu = single_pixel_mean(lam, ts, TD)
    var = single_pixel_variance(lam, ts, TD)
    theta = dead_time_theta(ts, TD)
    assert var == pytest.approx(mu - theta * mu * mu, rel=1e-12, abs=1e-15)
    assert -1e-15 <= var <= mu + 1e-15


def test_array_moments_scaling():
    lam = np.array([1e6, 3e7, 1e8])
    one = array_moments(lam, SpadArrayParams(1), 5e-9)
    assert np.allclose(one.mean, single_pixel_mean(lam, 5e-9, TD))
    assert np.allclose(one.variance, single_pixel_variance(lam, 5e-9, TD))
    a = array_moments(lam, SpadArrayParams(1000), 5e-9)
    b = array_moments(lam, SpadArrayParams(2000), 5e-9)
    assert np.allclose(b.mean, 2 * a.mean) and np.allclose(b.variance, 2 * a.variance)


def test_array_mean_injective_below_saturation():
    lam = np.linspace(0, 1 / TD, 10001)
    mu = array_moments(lam, SpadArrayParams(), 5e-9).mean
    assert np.all(np.diff(mu) > 0)


def test_gaussian_moments_validation():
    with pytest.raises(ModelDomainError):
        GaussianMoments(np.array([1.0]), np.array([-1.0]))
    with pytest.raises(ModelDomainError):
        GaussianMoments(np.array([np.nan]), np.array([1.0]))


def test_sample_output(rng):
    m = GaussianMoments(np.array([5.0]), np.array([0.0]))
    assert np.all(sample_output(m, rng, (100, 1)) == 5.0)
    m = GaussianMoments(np.array(120.0), np.array(90.0))
    x = sample_output(m, rng, 10**6)
    n = x.size
    assert abs(x.mean() - 120.0) <= 4 * math.sqrt(90.0 / n)
    assert abs(x.var(ddof=1) - 90.0) <= 4 * 90.0 * math.sqrt(2.0 / (n - 1))
    a = sample_output(m, np.random.default_rng(9), 50)
    b = sample_output(m, np.random.default_rng(9), 50)
    assert np.array_equal(a, b)


def test_oracle_operating_point():
    lam, ts = 5e7, 20e-9
    mean, var = dead_time_oracle(lam, ts, TD, 10**6, np.random.default_rng(1))
    assert mean == pytest.approx(single_pixel_mean(lam, ts, TD), rel=0.01)
    assert var == pytest.approx(single_pixel_variance(lam, ts, TD), rel=0.02)


def test_oracle_limits():
    rng = np.random.default_rng(2)
    lam, ts = 1e5, 20e-9
    mean, _ = dead_time_oracle(lam, ts, 1e-15, 200000, rng)
    assert mean == pytest.approx(lam * ts, rel=0.05)
    m_sat, _ = dead_time_oracle(1 / TD, ts, TD, 200000, rng)
    assert m_sat == pytest.approx(2 * math.exp(-1), rel=0.01)
    m_hi, _ = dead_time_oracle(3 / TD, ts, TD, 200000, rng)
    m_hier, _ = dead_time_oracle(6 / TD, ts, TD, 200000, rng)
    assert m_hier < m_hi < m_sat
