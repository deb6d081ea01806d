import numpy as np
import pytest

from dyadic_weights.dyadic import build_weight
from dyadic_weights.generators import weight_corpus


@pytest.fixture
def w13():
    return build_weight([1.0, 3.0])


@pytest.fixture(scope="session")
def corpus():
    return weight_corpus(60, seed=2024, max_depth=8)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
