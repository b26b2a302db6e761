import numpy as np
import pytest

from moduliflow.hyperbolic import FundamentalDomainBinning
from moduliflow.mesh import DomainGrid


@pytest.fixture(scope="session")
def binning60():
    # The default measurement binning; built once, it is immutable.
    return FundamentalDomainBinning(60, 60, 10.0)


@pytest.fixture(scope="session")
def small_binning():
    return FundamentalDomainBinning(8, 8, 4.0)


@pytest.fixture
def grid64():
    return DomainGrid(64, 64)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
