import numpy as np
import pytest

from schauderdrift.experiments import standard_test_path


@pytest.fixture(scope="session")
def standard_path():
    return standard_test_path()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
