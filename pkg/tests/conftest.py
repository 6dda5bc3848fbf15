import numpy as np
import pytest

from hifdetect.circuit import LineParams
from hifdetect.hif import HifParams


@pytest.fixture
def line():
    return LineParams(0.35, 2.6e-3, 40e-6, 2401.8, 207.0)


@pytest.fixture
def arc():
    return HifParams((97.2, 107.4), (116.6, 128.9), 800.0, 1100.0, tau=2e-3, sigma_step=1.0, seed=7)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
