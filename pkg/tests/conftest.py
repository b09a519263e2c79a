import numpy as np
import pytest

from spadowc.linkmodel import LinkBudget, ModulationConfig, SpadArrayParams


@pytest.fixture
def spad():
    return SpadArrayParams(2048, 10e-9, 0.18)


@pytest.fixture
def link60():
    """30 dB loss, 10 nW background, 60 uW average power."""
    return LinkBudget(1e-3, 10e-9, 60e-6, 785e-9)


@pytest.fixture
def link100():
    return LinkBudget(1e-3, 10e-9, 100e-6, 785e-9)


@pytest.fixture
def mod4():
    return ModulationConfig(4, 5e-9)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
