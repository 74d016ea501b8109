import numpy as np
import pytest

from rfcharge.model import ProblemInstance


@pytest.fixture
def inst():
    return ProblemInstance()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
