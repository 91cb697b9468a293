import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=30, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

FULL = os.environ.get("QAMP_FULL", "") not in ("", "0")


def random_density(dim, rng, rank=None):
    m = rng.normal(size=(dim, rank or dim)) + 1j * rng.normal(size=(dim, rank or dim))
    rho = m @ m.conj().T
    return rho / np.trace(rho).real


def random_hermitian(dim, rng):
    m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return m + m.conj().T


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
