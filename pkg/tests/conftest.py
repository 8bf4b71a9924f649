import warnings

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("horolab", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("horolab")


@pytest.fixture
def rng():
    return np.random.default_rng(20261014)


@pytest.fixture(autouse=True)
def _quiet_integration_warnings():
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", category=RuntimeWarning)
        warnings.filterwarnings("ignore", message=".*roundoff error.*")
        yield
