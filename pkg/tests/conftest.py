import numpy as np
import pytest

SEED = 20261015


@pytest.fixture
def rng():
    return np.random.default_rng(SEED)
