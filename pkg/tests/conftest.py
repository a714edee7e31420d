import warnings

import numpy as np
import pytest

from phasekit.errors import NearDoubleRootWarning
from phasekit.models import HonlsParams, StratParams, honls_degenerate_point


@pytest.fixture(autouse=True)
def _quiet_double_roots():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NearDoubleRootWarning)
        yield


@pytest.fixture
def honls_hyperbolic():
    return HonlsParams(1.0, 0.5, -1.0, 0.1, -1.5)


@pytest.fixture
def honls_degenerate():
    return honls_degenerate_point(1.0, 0.5, -1.0, 0.0)


@pytest.fixture
def strat():
    return StratParams(0.9, 1.0, 1.1, 0.3, 0.3, 0.4)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
