import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hardrods import core
from hardrods import fluctuations as fl
from hardrods.core import GasConfig, ORIGIN
from hardrods.errors import InsufficientReplicas, NegativeLength, NotPSD
from hardrods.macro import macro_field_H, macro_position
from hardrods.observables import constant
from hardrods.sampler import homogeneous_box, sample, signed_mix, tanh_ramp, zero_model

BOX = homogeneous_box()
RAMP = tanh_ramp()


def _sample(m, eps, pts, seed, replica=0):
    return sample(m, fl.observation_spec(m, eps, pts, seed, replica))


# --- microscopic estimators ----------------------------------------------------

def test_empirical_measure_examples():
    assert fl.empirical_measure(GasConfig(), 0.1, 1.0, constant(0, 1)) == 0.0
    c = GasConfig([-1.0, 0.2, 0.9, 3.0], [0.0, 1.0, -1.0, 0.0], [1.0, 1.0, 1.0, 1.0])
    eps = 0.1
    y = core.dilate(GasConfig(c.x, c.v, eps * c.r), 0.0).x
    count = np.sum((y >= 0.0) & (y <= 1.5))
    assert fl.empirical_measure(c, eps, 0.0, constant(0.0, 1.5)) == pytest.approx(eps * count, abs=1e-15)


def test_fluctuation_field_vanishes_at_origin():
    c = _sample(RAMP, 0.01, [(1.0, 1.0)], 3)
    assert fl.fluct_field(c, 0.01, RAMP, [ORIGIN])[0] == 0.0


def test_positional_fluctuation_is_the_field_at_the_moved_point():
    m, eps = RAMP, 0.02
    for seed in range(3):
        c = _sample(m, eps, [(1.5, 2.0)], seed)
        for x, v, t in [(0.3, 0.5, 1.0), (-0.8, -0.2, 1.5)]:
            got = fl.positional_fluctuation(c, eps, m, x, v, t)
            assert got == fl.fluct_field(c, eps, m, [(t, x + v * t)])[0]
            p = x + v * t
            micro = p + eps * core.field_H(c, t, p)
            direct = (micro - macro_position(m, x, v, t)) / math.sqrt(eps)
            assert got == pytest.approx(direct, abs=1e-9)


def test_fluctuation_field_is_centred():
    pts = [(1.0, 0.5), (2.0, -1.0)]
    eta = fl.eta_samples(BOX, 0.05, pts, 400, seed=8)
    for j in range(len(pts)):
        est = fl.mean_estimate(eta[:, j])
        assert abs(est.estimate) < 4 * est.std_error


def test_quasiparticle_point_without_particles():
    for micro in (False, True):
        assert fl.quasiparticle_lln_point(GasConfig(), 0.1, zero_model(), 0.7, 0.5, 2.0, microscopic=micro) == 1.7


def test_microscopic_contraction():
    c = GasConfig([-1.0, 0.5, 2.0], [0.0, 0.0, 0.0], [1.0, 2.0, 1.0])
    eps = 0.5
    for q in (-3.0, -1.2, 0.0, 0.9, 3.5):
        x = fl.microscopic_contract(c, eps, q)
        assert x + eps * core.field_H(c, 0.0, x) >= q
        below = np.nextafter(x, -np.inf)
        assert below + eps * core.field_H(c, 0.0, below) < q
    with pytest.raises(NegativeLength):
        fl.microscopic_contract(GasConfig([0.0], [0.0], [-1.0]), 0.1, 0.0)


def test_quasiparticle_lln_at_time_zero_returns_label():
    m, eps = BOX, 1e-3
    vals = [fl.quasiparticle_lln_point(_sample(m, eps, [(0.0, 2.0)], 5, k), eps, m, 1.0, 0.5, 0.0)
            for k in range(60)]
    est = fl.mean_estimate(vals)
    assert abs(est.estimate - 1.0) < 4 * est.std_error + 1e-12


# --- Levy-Chentsov geometry ----------------------------------------------------

def test_lc_distance_examples():
    for x in (0.5, 2.0):
        assert fl.lc_distance(BOX, (0, 0), (0, x)) == pytest.approx(4 * x / 3, rel=1e-10)
    assert fl.lc_distance(RAMP, (1.0, 0.4), (1.0, 0.4)) == 0.0


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_lc_distance_is_a_pseudometric(seed):
    rng = np.random.default_rng(seed)
    a, b, c = (tuple(rng.uniform(-2, 2, 2)) for _ in range(3))
    dab, dba = fl.lc_distance(RAMP, a, b), fl.lc_distance(RAMP, b, a)
    assert dab == pytest.approx(dba, abs=1e-9)
    assert dab <= fl.lc_distance(RAMP, a, c) + fl.lc_distance(RAMP, c, b) + 1e-8
    s = rng.uniform(0, 1)
    mid = tuple(np.add(a, s * np.subtract(b, a)))
    assert dab == pytest.approx(fl.lc_distance(RAMP, a, mid) + fl.lc_distance(RAMP, mid, b), abs=1e-8)


def test_lc_covariance_examples():
    a = (1.0, 0.7)
    single = fl.lc_covariance(RAMP, [a])
    assert single.matrix[0, 0] == pytest.approx(fl.lc_distance(RAMP, ORIGIN, a), abs=1e-12)
    with_origin = fl.lc_covariance(RAMP, [a, ORIGIN, (2.0, -1.0)])
    assert np.all(with_origin.matrix[1] == 0.0) and np.all(with_origin.matrix[:, 1] == 0.0)
    b = (2.0, 1.4)
    line = fl.lc_covariance(RAMP, [a, b])
    assert line.matrix[0, 1] == pytest.approx(fl.lc_distance(RAMP, ORIGIN, a), abs=1e-8)
    assert np.array_equal(line.matrix, line.matrix.T)


def test_psd_check():
    fl.check_psd(np.array([[1.0, 0.5], [0.5, 1.0]]))
    with pytest.raises(NotPSD):
        fl.check_psd(np.array([[1.0, 2.0], [2.0, 1.0]]))


# --- estimators ---------------------------------------------------------------

def test_covariance_estimator_on_synthetic_gaussian():
    rng = np.random.default_rng(21)
    true = np.array([[2.0, 0.6, 0.0], [0.6, 1.0, -0.3], [0.0, -0.3, 0.5]])
    x = rng.multivariate_normal(np.zeros(3), true, size=3000)
    cov, se = fl.estimate_covariance(x)
    np.testing.assert_allclose(cov, np.cov(x, rowvar=False), rtol=1e-12)
    assert np.all(np.abs(cov - true) <= 4 * se)


def test_covariance_estimator_edge_cases():
    cov, se = fl.estimate_covariance(np.ones((10, 2)))
    assert np.all(cov == 0.0) and np.all(se == 0.0)
    with pytest.raises(InsufficientReplicas):
        fl.estimate_covariance(np.ones((1, 3)))


def test_jackknife_of_the_mean_is_the_usual_error():
    x = np.random.default_rng(4).normal(size=50)
    est, se = fl.jackknife(x[:, None], lambda a: a.mean(axis=0))
    assert float(se[0]) == pytest.approx(x.std(ddof=1) / math.sqrt(50), rel=1e-10)


def test_gaussianity_diagnostics():
    rng = np.random.default_rng(9)
    gauss = fl.gaussianity_diagnostics(rng.normal(size=(5000, 2)))
    for d in gauss:
        assert abs(d["skewness"]) < 4 * d["skewness_se"]
        assert abs(d["excess_kurtosis"]) < 4 * d["kurtosis_se"]
    (expo,) = fl.gaussianity_diagnostics(rng.exponential(size=20000))
    assert expo["excess_kurtosis"] > 4 * expo["kurtosis_se"]
    assert expo["excess_kurtosis"] == pytest.approx(6.0, abs=1.0)
    with pytest.raises(InsufficientReplicas):
        fl.gaussianity_diagnostics(rng.normal(size=99))


def test_mean_and_variance_estimators():
    with pytest.raises(InsufficientReplicas):
        fl.mean_estimate([1.0])
    est = fl.variance_estimate(np.random.default_rng(1).normal(0, 2, 4000))
    assert abs(est.estimate - 4.0) < 4 * est.std_error


def test_brownian_report():
    assert fl.brownian_variance_check(BOX, 0.0, 0.0, []) == {"increments": [], "correlations": [], "pass": True}
    times = [0.0, 1.0, 2.0]
    eta = fl.eta_samples(BOX, 0.05, [(t, 0.0) for t in times], 600, seed=2)
    rep = fl.brownian_variance_check(BOX, 0.0, 0.0, times, eta)
    for inc in rep["increments"]:
        assert inc["target"] == pytest.approx(2 * (inc["t1"] - inc["t0"]) / 3, rel=1e-10)
    assert rep["pass"]


# --- replica driver -------------------------------------------------------------

def test_replicas_are_independent_of_thread_count():
    pts = [(1.0, 0.5), (0.5, -0.5)]
    one = fl.eta_samples(signed_mix(), 0.05, pts, 40, seed=3, threads=1)
    four = fl.eta_samples(signed_mix(), 0.05, pts, 40, seed=3, threads=4)
    assert np.array_equal(one, four)


def test_default_threads_reads_environment(monkeypatch):
    monkeypatch.setenv(fl.THREADS_ENV, "3")
    assert fl.default_threads() == 3
    monkeypatch.setenv(fl.THREADS_ENV, "junk")
    assert fl.default_threads() == 1
    monkeypatch.delenv(fl.THREADS_ENV)
    assert fl.default_threads() == 1


def test_lln_errors_are_nested_and_shrink():
    errs = fl.lln_errors(BOX, [0.1, 0.001], [(1.0, 1.0)], 60, seed=1)
    assert errs.shape == (60, 2, 1)
    assert np.sqrt(np.mean(errs[:, 1, 0] ** 2)) < np.sqrt(np.mean(errs[:, 0, 0] ** 2))
    assert macro_field_H(BOX, 1.0, 1.0) == pytest.approx(1.0, abs=1e-12)
