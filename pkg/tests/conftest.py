import numpy as np
import pytest
from hypothesis import HealthCheck, settings

# Property tests share processes with heavier suites; wall-clock deadlines
# would flake there.
settings.register_profile(
    "suite", deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("suite")


@pytest.fixture
def rng():
    return np.random.default_rng(0)
