import numpy as np
import pytest

from tests.helpers import periodic_grid


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def grid16():
    return periodic_grid(16)


@pytest.fixture
def grid16_o4():
    return periodic_grid(16, order=4)
