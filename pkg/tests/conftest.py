import numpy as np
import pytest

from ultrawave.verify import Battery


@pytest.fixture(scope="session")
def battery():
    """Memoized battery signals and FL/MOD reports shared across test modules."""
    return Battery()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
