import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from szego_toolkit.models.weighted_sphere import SpherePoint, WeightedSphere

settings.register_profile('default', max_examples=25, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile('ci', max_examples=100, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile('default')


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope='session')
def s3_round():
    return WeightedSphere(n=1, weights=(1, 1), metric_preset='ambient-round')


@pytest.fixture(scope='session')
def s5_round():
    return WeightedSphere(n=2, weights=(1, 1, 1), metric_preset='ambient-round')


@pytest.fixture(scope='session')
def s3_levi():
    return WeightedSphere(n=1, weights=(1, 1))


@pytest.fixture(scope='session')
def sphere_12():
    return WeightedSphere(n=1, weights=(1, 2))


def random_point(rng, dim):
    return SpherePoint.normalized(rng.normal(size=dim) + 1j * rng.normal(size=dim))


def grid_point(r):
    return SpherePoint((r, math.sqrt(1.0 - r * r)))
