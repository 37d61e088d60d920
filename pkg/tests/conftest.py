import numpy as np
import pytest

from qbcsim import qmath


@pytest.fixture
def rng():
    return np.random.default_rng(20240915)


@pytest.fixture(scope="session")
def quad():
    return qmath.reference_quadruple()
