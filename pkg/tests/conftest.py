import numpy as np
import pytest

from hardrods import GasConfig, RodConfig


def brute_field(particles, t, x):
    """Plain-loop evaluation of the signed length field, used as an oracle."""
    total = 0.0
    for z, w, r in particles:
        if z >= 0 and z + w * t < x:
            total += r
        elif z < 0 and z + w * t >= x:
            total -= r
    return total


def gas(*particles) -> GasConfig:
    return GasConfig.from_particles(particles)


def rods(*particles) -> RodConfig:
    return RodConfig.from_particles(particles)


def triples(c):
    return [tuple(float(u) for u in p) for p in c]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
