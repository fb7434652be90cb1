import numpy as np
import pytest

from modalfuse import tracking_model_2d


@pytest.fixture
def model():
    return tracking_model_2d()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def point_prior(x0):
    """Prior sampler putting every particle at x0."""
    x0 = np.asarray(x0, dtype=float)
    return lambda n, rng: np.tile(x0, (n, 1))
