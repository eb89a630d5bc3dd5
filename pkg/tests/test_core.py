import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hardrods import core
from hardrods.core import CrossingClass, GasConfig, Particle, RodConfig, segment
from hardrods.errors import PointInsideRod

from conftest import brute_field, gas, rods, triples


# --- field and its relatives -------------------------------------------------

@pytest.mark.parametrize("particles,t,x,want", [
    ([(1.0, 0.0, 0.5)], 0.0, 2.0, 0.5),
    ([(1.0, 0.0, 0.5)], 0.0, 0.5, 0.0),
    ([(-1.0, 0.0, 0.5)], 0.0, -1.0, -0.5),
    ([], 3.0, 1.0, 0.0),
])
def test_field_examples(particles, t, x, want):
    assert core.field_H(gas(*particles), t, x) == want
    assert brute_field(particles, t, x) == want


def test_field_vanishes_at_origin(rng):
    for _ in range(20):
        c = GasConfig(rng.normal(size=8), rng.normal(size=8), rng.uniform(-1, 2, 8))
        assert core.field_H(c, 0.0, 0.0) == 0.0


def test_field_many_matches_pointwise(rng):
    c = GasConfig(rng.normal(size=30), rng.normal(size=30), rng.uniform(0, 1, 30))
    xs = np.linspace(-3, 3, 41)
    many = core.field_H_many(c, 1.3, xs)
    for x, h in zip(xs, many):
        assert h == pytest.approx(brute_field(triples(c), 1.3, x), abs=1e-12)


@pytest.mark.parametrize("p,a,b,want", [
    ((1, 0, 0.5), (0, 0), (2, 2), CrossingClass.Plus),
    ((1, 0, 0.5), (0, 0), (0, 0.5), CrossingClass.NoCross),
    ((0, 2, 1), (0, 1), (1, 1), CrossingClass.Minus),
])
def test_crossing_class_examples(p, a, b, want):
    assert core.crossing_class(Particle(*p), segment(a, b)) == want


def test_mass_flow_examples():
    assert core.mass_flow(gas((1.0, 0.0, 0.5)), 0, 1, 2) == 0.5
    assert core.mass_flow(gas((0, 1, 1), (1, 0, 1)), 1, 0, 2) == -1.0
    assert core.mass_flow(gas((0, 1, 1), (1, 0, 1)), 0.3, 0.7, 0.0) == 0.0


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_flow_by_crossings_matches_field_increment(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(0, 15))
    c = GasConfig(rng.uniform(-4, 4, n), rng.uniform(-1, 1, n), rng.uniform(-1, 2, n))
    x, v, t = rng.uniform(-2, 2), rng.uniform(-1.5, 1.5), rng.uniform(0, 3)
    assert core.mass_flow_crossings(c, x, v, t) == pytest.approx(core.mass_flow(c, x, v, t), abs=1e-12)


def test_signed_mass_examples():
    assert core.signed_mass(gas((1.0, 0.0, 0.5)), 0, 2) == 0.5
    assert core.signed_mass(gas((1.0, 0.0, 0.5)), 2, 0) == -0.5
    assert core.signed_mass(gas((0, 1, 1), (1, 0, 1)), 0, 2) == 2.0
    assert core.signed_mass(gas((0, 1, 1)), 1, 1) == 0.0


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_signed_mass_is_field_difference(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(0, 15))
    c = GasConfig(rng.uniform(-4, 4, n), rng.uniform(-1, 1, n), rng.uniform(-1, 2, n))
    a, b = rng.uniform(-5, 5, 2)
    want = core.field_H(c, 0.0, b) - core.field_H(c, 0.0, a)
    assert core.signed_mass(c, a, b) == pytest.approx(want, abs=1e-12)


# --- dilation and contraction -----------------------------------------------

def test_dilate_examples():
    assert triples(core.dilate(gas((0, 1, 1), (1, 0, 1)), 0.0)) == [(0, 1, 1), (2, 0, 1)]
    assert triples(core.dilate(gas((-1, 0, 0.5)), 0.0)) == [(-1.5, 0, 0.5)]
    c = gas((0.3, 1, 0), (-2, 0, 0), (4, 1, 0))
    assert core.dilate(c, 1.7).x.tolist() == c.x.tolist()


def test_contract_examples():
    assert triples(core.contract(rods((0, 1, 1), (2, 0, 1)), 0.0)) == [(0, 1, 1), (1, 0, 1)]
    y = rods((0.3, 1, 0), (-2, 0, 0))
    assert sorted(core.contract(y, 0.0).x.tolist()) == sorted(y.x.tolist())
    with pytest.raises(PointInsideRod):
        core.contract(rods((0.5, 0, 1)), 1.0)


dyadic = st.integers(-2 ** 12, 2 ** 12).map(lambda k: k / 256.0)
dyadic_len = st.integers(0, 512).map(lambda k: k / 256.0)


@settings(max_examples=150, deadline=None)
@given(st.lists(st.tuples(dyadic, dyadic, dyadic_len), max_size=20), dyadic)
def test_dilation_bijection_is_exact_on_dyadic_data(particles, a):
    c = GasConfig.from_particles(particles)
    y = core.dilate(c, a)
    assert core.contract(y, a) == c
    base = core.default_base_point(y)
    back = core.dilate(core.contract(y, base), base)
    assert sorted(triples(back)) == sorted(triples(y))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_dilation_bijection_general_floats(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 20))
    c = GasConfig(rng.uniform(-5, 5, n), rng.uniform(-1, 1, n), rng.uniform(0, 2, n))
    a = float(rng.uniform(-5, 5))
    back = core.contract(core.dilate(c, a), a)
    np.testing.assert_allclose(back.as_array(), c.as_array(), atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_dilation_preserves_order_and_spacing(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 20))
    c = GasConfig(rng.uniform(-5, 5, n), rng.uniform(-1, 1, n), rng.uniform(0, 2, n))
    y = core.dilate(c, 0.0)
    assert np.all(y.y[1:] >= y.y[:-1] + y.r[:-1] - 1e-12)
    assert y.admits_base_point(0.0)


# --- evolution ---------------------------------------------------------------

def test_free_evolve_examples():
    assert triples(core.free_evolve(gas((0, 1, 1)), 2)) == [(2, 1, 1)]
    c = gas((0, 1, 1), (3, -1, 0.5))
    assert core.free_evolve(c, 0.0) == c
    assert triples(core.free_evolve(gas((0, 1, 0), (1, -1, 0)), 1)) == [(0, -1, 0), (1, 1, 0)]


def test_quasiparticle_examples():
    c = gas((0, 1, 1), (1, 0, 1))
    assert core.quasiparticle_position(c, 0, 2.0) == 3.0
    assert core.quasiparticle_position(c, 1, 2.0) == 1.0
    single = gas((5, 2, 3))
    for t in (0.0, 0.7, 4.0):
        assert core.quasiparticle_position(single, 0, t) == 5 + 2 * t
    with pytest.raises(IndexError):
        core.quasiparticle_position(c, 2, 1.0)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_quasiparticle_field_and_flow_routes_agree(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 15))
    c = GasConfig(rng.uniform(-4, 4, n), rng.uniform(-1, 1, n), rng.uniform(0, 2, n))
    t = float(rng.uniform(0, 4))
    for i in range(n):
        assert core.quasiparticle_position_via_flow(c, i, t) == pytest.approx(
            core.quasiparticle_position(c, i, t), abs=1e-12)
    np.testing.assert_array_equal(core.quasiparticle_positions(c, 0.0), core.dilate(c, 0.0).x)


def test_hardrod_evolve_examples():
    c = gas((0, 1, 1), (1, 0, 1))
    assert triples(core.hardrod_evolve(c, 0.0)) == [(0, 1, 1), (2, 0, 1)]
    assert triples(core.hardrod_evolve(c, 2.0)) == [(1, 0, 1), (3, 1, 1)]
    assert len(core.hardrod_evolve(GasConfig(), 5.0)) == 0


def test_tracer_examples():
    assert core.tracer(gas((1.0, 0.0, 0.5)), 1.0) == 0.0
    # the line from z=1 with speed -1 sits at -1 by t=2: the z>=0 branch holds, so +0.5
    assert core.tracer(gas((1.0, -1.0, 0.5)), 2.0) == 0.5
    assert brute_field([(1.0, -1.0, 0.5)], 2.0, 0.0) == 0.5
    assert core.tracer(GasConfig(), 3.0) == 0.0


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_rod_group_property(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 15))
    y = core.dilate(GasConfig(rng.uniform(-5, 5, n), rng.uniform(-1, 1, n), rng.uniform(0, 2, n)), 0.0)
    s, t = rng.uniform(0, 3, 2)
    two = core.rod_evolve(core.rod_evolve(y, s), t)
    one = core.rod_evolve(y, s + t)
    np.testing.assert_allclose(two.as_array(), one.as_array(), atol=1e-9)


def test_negative_lengths_go_through_gas_representation():
    c = gas((-1, 0.5, 1.0), (0.5, -0.5, -0.4), (2.0, 0.0, 0.8))
    pos = core.quasiparticle_positions(c, 1.5)
    for i, (x, v, r) in enumerate(c):
        want = x + v * 1.5 + brute_field(triples(c), 1.5, x + v * 1.5)
        assert pos[i] == pytest.approx(want, abs=1e-14)


def test_rod_ending_at_base_point():
    y = rods((-1.0, 0.0, 1.0), (0.5, 1.0, 0.5))
    assert y.admits_base_point(0.0) and not y.admits_base_point(0.0, strict=True)
    # contraction is defined, but dilation from the same point cannot restore the touching rod
    back = core.dilate(core.contract(y, 0.0), 0.0)
    assert triples(back) != triples(y)
    assert core.default_base_point(y) == -1.0
    with pytest.raises(PointInsideRod):
        core.rod_positions(y, 1.0, a=0.0)
    np.testing.assert_allclose(core.rod_positions(y, 0.0), y.x, atol=1e-15)


def test_coincident_particles_dilate_into_touching_rods():
    c = gas((0.0, 0.0, 0.5), (0.0, 1.0, 0.25), (-1.0, 0.0, 1.0), (-1.0, 0.5, 1.0))
    y = core.dilate(c, 0.0)
    assert triples(y) == [(-3.0, 0.0, 1.0), (-2.0, 0.5, 1.0), (0.0, 0.0, 0.5), (0.5, 1.0, 0.25)]
    assert core.contract(y, 0.0) == c
