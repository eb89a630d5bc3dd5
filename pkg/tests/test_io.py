import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hardrods import core, io
from hardrods.core import GasConfig
from hardrods.observables import box, constant, from_spec, polynomial

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@settings(max_examples=100, deadline=None)
@given(finite)
def test_seventeen_digits_round_trip(x):
    assert float(io.fmt(x)) == x


def test_format_keeps_types():
    assert io.fmt(3) == "3" and io.fmt(np.int64(-2)) == "-2"
    assert io.fmt(True) == "true"
    assert io.fmt(0.1) == "0.10000000000000001"


def test_empty_table_is_header_only(tmp_path):
    io.write_csv(tmp_path / "t.csv", ["a", "b"], [])
    assert (tmp_path / "t.csv").read_text() == "a,b\n"


def test_config_round_trips(tmp_path, rng):
    c = GasConfig(rng.normal(size=9), rng.normal(size=9), rng.uniform(-1, 2, 9))
    io.write_config_csv(tmp_path / "c.csv", c)
    io.write_config_binary(tmp_path / "c.bin", c)
    assert io.read_config_csv(tmp_path / "c.csv") == c
    assert io.read_config_binary(tmp_path / "c.bin") == c
    y = core.dilate(GasConfig(c.x, c.v, np.abs(c.r)), 0.0)
    io.write_config_binary(tmp_path / "y.bin", y)
    assert io.read_config_binary(tmp_path / "y.bin", kind="rod") == y


def test_bad_inputs(tmp_path):
    (tmp_path / "bad.csv").write_text("a,b,c\n1,2,3\n")
    with pytest.raises(ValueError):
        io.read_config_csv(tmp_path / "bad.csv")
    io.write_config_binary(tmp_path / "c.bin", GasConfig([1.0, 2.0], [0.0, 0.0], [1.0, 1.0]))
    data = (tmp_path / "c.bin").read_bytes()
    (tmp_path / "cut.bin").write_bytes(data[:-8])
    with pytest.raises(ValueError):
        io.read_config_binary(tmp_path / "cut.bin")


def test_tensor_and_sample_round_trips(tmp_path, rng):
    arrays = [rng.normal(size=(3, 4)), np.arange(5.0), rng.normal(size=(2, 2, 2))]
    io.write_tensors(tmp_path / "t.bin", arrays)
    for a, b in zip(arrays, io.read_tensors(tmp_path / "t.bin")):
        np.testing.assert_array_equal(a, b)
    s = rng.normal(size=(6, 3))
    io.write_samples_csv(tmp_path / "s.csv", s)
    np.testing.assert_array_equal(io.read_samples_csv(tmp_path / "s.csv"), s)


def test_observables():
    y = np.array([-1.0, 0.0, 0.5, 1.0, 2.0])
    v = np.array([0.2, -0.5, 0.9, 0.1, 0.0])
    r = np.ones(5)
    np.testing.assert_array_equal(constant(0, 1, 2.0)(y, v, r), [0, 2, 2, 2, 0])
    np.testing.assert_array_equal(box(0, 1, 0.0, 1.0)(y, v, r), [0, 0, 1, 1, 0])
    np.testing.assert_allclose(polynomial(-5, 5, {(1, 0): 1.0, (0, 1): 2.0})(y, v, r), v + 2)
    assert from_spec({"kind": "box", "a": 0, "b": 1, "v_lo": 0, "v_hi": 1}).v_breaks == (0.0, 1.0)
    with pytest.raises(ValueError):
        from_spec({"kind": "nope", "a": 0, "b": 1})
    with pytest.raises(ValueError):
        constant(1.0, 0.0)
    with pytest.raises(ValueError):
        polynomial(0, 1, {(1, 0): 1.0}).check((-1, 1), (0, 2))
