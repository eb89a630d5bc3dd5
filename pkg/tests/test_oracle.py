import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hardrods import core, oracle
from hardrods.core import GasConfig, RodConfig
from hardrods.errors import EventOverflow, NegativeLength

from conftest import rods, triples


def test_single_collision_example():
    y = rods((0, 1, 1), (2, 0, 1))
    assert triples(oracle.oracle_evolve(y, 2.0)) == [(1, 0, 1), (3, 1, 1)]
    assert oracle.oracle_evolve(y, 0.0) == y


def test_zero_length_collision_swaps_labels():
    assert triples(oracle.oracle_evolve(rods((0, 1, 0), (1, 0, 0)), 2.0)) == [(1, 0, 0), (2, 1, 0)]


def test_trajectory_jumps_by_partner_length():
    y = rods((0, 1, 1), (2, 0, 1))
    assert list(oracle.oracle_trajectory(y, 0, [0, 1, 2])) == [0, 2, 3]
    assert list(oracle.oracle_trajectory(rods((1.5, -0.5, 2)), 0, [0, 5])) == [1.5, -1.0]
    with pytest.raises(IndexError):
        oracle.oracle_trajectory(y, 2, [1.0])


def test_events_and_errors():
    events = oracle.oracle_events(rods((0, 1, 1), (2, 0, 1)), 5.0)
    assert len(events) == 1 and events[0].time == 1.0
    with pytest.raises(NegativeLength):
        oracle.oracle_evolve(RodConfig([0.0, 3.0], [1.0, 0.0], [1.0, -0.5], validate=False), 1.0)
    crowd = core.dilate(GasConfig(np.arange(6.0), np.tile([1.0, -1.0], 3), np.full(6, 0.1)), 0.0)
    with pytest.raises(EventOverflow):
        oracle.oracle_evolve(crowd, 50.0, max_events=3)


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_oracle_agrees_with_closed_form(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 21))
    c = GasConfig(rng.uniform(-10, 10, n), rng.uniform(-1, 1, n), rng.uniform(0, 2, n))
    t = float(rng.uniform(0, 10))
    got = oracle.oracle_evolve(core.dilate(c, 0.0), t)
    want = core.hardrod_evolve(c, t)
    np.testing.assert_allclose(got.as_array(), want.as_array(), atol=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_exchange_conserves_lengths_and_velocities(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 21))
    y = core.dilate(GasConfig(rng.uniform(-10, 10, n), rng.uniform(-1, 1, n), rng.uniform(0, 2, n)), 0.0)
    out = oracle.oracle_evolve(y, float(rng.uniform(0, 10)))
    assert sorted(out.v.tolist()) == sorted(y.v.tolist())
    assert out.r.sum() == pytest.approx(y.r.sum(), abs=1e-12)
    assert np.all(out.y[1:] >= out.y[:-1] + out.r[:-1] - 1e-9)
