import numpy as np
import pytest

from barkaec import subband
from barkaec.framing import StftConfig


@pytest.fixture(scope="session")
def proto():
    return subband.design_prototype()


@pytest.fixture(scope="session")
def stft_cfg():
    return StftConfig()


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(12345)
