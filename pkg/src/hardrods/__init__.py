"""Hard-rod gas: microscopic dynamics, Poisson initial data, hydrodynamic limits and fluctuations."""

__version__ = "0.1.0"

from .core import (ORIGIN, CrossingClass, GasConfig, Particle, RodConfig, Segment, SpaceTimePoint,
                   contract, crossing_class, dilate, field_H, free_evolve, hardrod_evolve, mass_flow,
                   quasiparticle_position, rod_evolve, rod_positions, segment, tracer)
from .errors import *  # noqa: F401,F403
from .oracle import oracle_evolve, oracle_positions, oracle_trajectory
from .sampler import IntensityModel, SampleSpec, mu_segment, sample, sample_nested
