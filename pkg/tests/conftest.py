import random

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "afflog", deadline=None, derandomize=True, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("afflog")


@pytest.fixture
def rng():
    return random.Random(20240611)
