import numpy as np
import pytest
from hypothesis import settings

from sprintsim.params import SystemParams

settings.register_profile("default", deadline=None, max_examples=50)
settings.load_profile("default")


def ideal(**kw):
    """Parameters with impurities, backscattering and detunings switched off."""
    base = dict(h=0.0, r_sigma=0.0, r_pi=0.0, delta_C=0.0, delta_a=0.0)
    base.update(kw)
    return SystemParams(**base)


def random_params(rng, impurities=True):
    return SystemParams(
        kappa_ex=rng.uniform(2, 50),
        kappa_i=rng.uniform(0, 10),
        gamma=rng.uniform(1, 6),
        gamma_prime=rng.uniform(1, 6),
        delta_C=rng.uniform(-15, 15),
        delta_a=rng.uniform(-10, 10),
        delta_a_prime=rng.uniform(-90, 90),
        g_mag=rng.uniform(0, 30),
        g_phase=rng.uniform(0, 2 * np.pi),
        g_prime_ratio=rng.uniform(0, 1.5),
        h=rng.uniform(0, 3) if impurities else 0.0,
        r_sigma=rng.uniform(0, 0.3) if impurities else 0.0,
        r_pi=rng.uniform(0, 0.3) if impurities else 0.0,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
