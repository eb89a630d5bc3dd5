"""Rescaled fields, empirical measures and Gaussian fluctuation statistics.

A configuration sampled at intensity ``f / eps`` carries rods whose
macroscopic length is ``eps * r``, so the rescaled field is
``H^eps = eps * field_H``.  Fluctuations are centred by the quadrature field
of the model, never by an ensemble mean.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from .core import ORIGIN, GasConfig, SpaceTimePoint, _FieldTable, segment
from .errors import InsufficientReplicas, NegativeLength, NotPSD
from .macro.model import macro_contract_label, macro_field_H
from .observables import Observable
from .sampler import IntensityModel, SampleSpec, mu_segment

THREADS_ENV = "HARDRODS_THREADS"


@dataclass(frozen=True)
class EstimatorResult:
    estimate: float
    std_error: float
    replicas: int

    def to_dict(self) -> dict:
        return asdict(self)


def mean_estimate(values) -> EstimatorResult:
    values = np.asarray(values, dtype=np.float64)
    n = len(values)
    if n < 2:
        raise InsufficientReplicas("a standard error needs at least 2 replicas")
    return EstimatorResult(float(values.mean()), float(values.std(ddof=1) / math.sqrt(n)), n)


def _points(pts) -> list:
    return [SpaceTimePoint(float(p[0]), float(p[1])) for p in pts]


# ---------------------------------------------------------------------------
# rescaled microscopic quantities


def rescaled_field(c: GasConfig, eps: float, t: float, xs):
    """``H^eps(t, x) = eps * H(t, x)`` at many points."""
    xs = np.asarray(xs, dtype=np.float64)
    if len(c) == 0:
        return np.zeros_like(xs)
    return eps * _FieldTable(c, t)(xs)


def rescaled_positions(c: GasConfig, eps: float, t: float) -> np.ndarray:
    """``y^eps_{v,t}(x)`` for every particle of ``c``."""
    p = c.x + c.v * t
    return p + rescaled_field(c, eps, t, p)


def empirical_measure(c: GasConfig, eps: float, t: float, obs: Observable) -> float:
    """``eps * sum r * phi(y^eps, v, r)`` over the particles."""
    if len(c) == 0:
        return 0.0
    y = rescaled_positions(c, eps, t)
    return eps * math.fsum(c.r * obs(y, c.v, c.r))


def macro_centres(m: IntensityModel, pts) -> np.ndarray:
    return np.array([macro_field_H(m, p.t, p.x) for p in _points(pts)])


def fluct_field(c: GasConfig, eps: float, m: IntensityModel, pts, macro=None) -> np.ndarray:
    """``eta^eps = (H^eps - H) / sqrt(eps)`` at each space-time point.

    ``macro`` may hold precomputed quadrature values ``H`` at the points.
    """
    pts = _points(pts)
    centre = macro_centres(m, pts) if macro is None else np.asarray(macro, dtype=np.float64)
    micro = np.empty(len(pts))
    by_time: dict = {}
    for i, p in enumerate(pts):
        by_time.setdefault(p.t, []).append(i)
    for t, idx in by_time.items():
        micro[idx] = rescaled_field(c, eps, t, [pts[i].x for i in idx])
    return (micro - centre) / math.sqrt(eps)


def positional_fluctuation(c: GasConfig, eps: float, m: IntensityModel, x: float, v: float, t: float,
                           macro=None) -> float:
    """``(y^eps_{v,t}(x) - y_{v,t}(x)) / sqrt(eps)``.

    Both positions are ``x + v t`` plus a field at ``(t, x + v t)``, so the
    common part cancels exactly and the difference is the fluctuation field
    at that point.
    """
    return float(fluct_field(c, eps, m, [(t, x + v * t)], macro=macro)[0])


def quasiparticle_lln_point(c: GasConfig, eps: float, m: IntensityModel, q: float, v: float, t: float,
                            microscopic: bool = False) -> float:
    """``u^eps_{v,t}(q) = y^eps_{v,t}(x)`` for the contracted label ``x``.

    The label is the macroscopic contraction of ``q`` by default; with
    ``microscopic=True`` it is the contraction by the sampled rods, which
    needs nonnegative lengths.
    """
    if microscopic:
        x = microscopic_contract(c, eps, q)
    else:
        x = float(macro_contract_label(m, q))
    p = x + v * t
    return p + float(rescaled_field(c, eps, t, [p])[0])


def microscopic_contract(c: GasConfig, eps: float, q: float) -> float:
    """Smallest ``x`` with ``x + eps * H(0, x) >= q`` (generalized inverse of the dilation)."""
    if not c.nonnegative:
        raise NegativeLength("microscopic contraction needs nonnegative lengths")
    if len(c) == 0:
        return float(q)
    table = _FieldTable(c, 0.0)

    def dil(x):
        return x + eps * float(table(np.array([x]))[0])

    span = eps * float(np.sum(c.r)) + 1.0
    lo, hi = q - span, q + span
    while dil(lo) >= q:
        lo -= span
    while dil(hi) < q:
        hi += span
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if dil(mid) >= q:
            hi = mid
        else:
            lo = mid
    return hi


# ---------------------------------------------------------------------------
# Levy-Chentsov covariance


def lc_distance(m: IntensityModel, a, b) -> float:
    """Second length moment of the lines crossing the segment ``[a, b]``."""
    a, b = SpaceTimePoint(*map(float, a)), SpaceTimePoint(*map(float, b))
    if a == b:
        return 0.0
    return mu_segment(m, segment(a, b), 2, "both")


@dataclass(frozen=True)
class CovarianceModel:
    model: IntensityModel
    points: tuple
    matrix: np.ndarray

    @property
    def variances(self) -> np.ndarray:
        return np.diag(self.matrix).copy()


def check_psd(matrix, tol: float = 1e-10) -> None:
    mat = np.asarray(matrix, dtype=np.float64)
    if not np.allclose(mat, mat.T, rtol=0, atol=tol * max(1.0, float(np.abs(mat).max(initial=0.0)))):
        raise NotPSD("covariance matrix is not symmetric")
    if len(mat) and np.linalg.eigvalsh(mat).min() < -tol * max(1.0, float(np.abs(mat).max())):
        raise NotPSD("covariance matrix has a negative eigenvalue")


def lc_covariance(m: IntensityModel, pts) -> CovarianceModel:
    """``1/2 (d(o, a) + d(o, b) - d(a, b))`` for every pair of points."""
    pts = tuple(_points(pts))
    n = len(pts)
    d_o = np.array([lc_distance(m, ORIGIN, p) for p in pts])
    mat = np.zeros((n, n))
    for i in range(n):
        mat[i, i] = d_o[i]
        for j in range(i + 1, n):
            mat[i, j] = mat[j, i] = 0.5 * (d_o[i] + d_o[j] - lc_distance(m, pts[i], pts[j]))
    check_psd(mat)
    return CovarianceModel(m, pts, mat)


# ---------------------------------------------------------------------------
# estimators


def jackknife(samples, statistic: Callable) -> tuple:
    """Delete-one jackknife: ``(statistic on all rows, standard error)``."""
    samples = np.asarray(samples, dtype=np.float64)
    n = len(samples)
    if n < 2:
        raise InsufficientReplicas("jackknife needs at least 2 replicas")
    full = np.asarray(statistic(samples), dtype=np.float64)
    keep = np.ones(n, dtype=bool)
    loo = []
    for i in range(n):
        keep[i] = False
        loo.append(statistic(samples[keep]))
        keep[i] = True
    loo = np.asarray(loo, dtype=np.float64)
    se = np.sqrt((n - 1) / n * np.sum((loo - loo.mean(axis=0)) ** 2, axis=0))
    return full, se


def estimate_covariance(samples) -> tuple:
    """Unbiased sample covariance of a replica x point matrix and its jackknife errors.

    The delete-one covariances follow from one rank-one downdate each, so
    the jackknife costs one pass over the replicas.
    """
    X = np.asarray(samples, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    n = X.shape[0]
    if n < 3:
        raise InsufficientReplicas("covariance with jackknife errors needs at least 3 replicas")
    Xc = X - X.mean(axis=0)
    ss = Xc.T @ Xc
    cov = ss / (n - 1)
    outer = np.einsum("ni,nj->nij", Xc, Xc)
    loo = (ss[None] - (n / (n - 1)) * outer) / (n - 2)
    se = np.sqrt((n - 1) / n * np.sum((loo - loo.mean(axis=0)) ** 2, axis=0))
    return cov, se


def skew_standard_error(n: int) -> float:
    return math.sqrt(6.0 * (n - 2) / ((n + 1) * (n + 3)))


def kurtosis_standard_error(n: int) -> float:
    return math.sqrt(24.0 * n * (n - 2) * (n - 3) / ((n + 1) ** 2 * (n + 3) * (n + 5)))


def gaussianity_diagnostics(samples, min_replicas: int = 100) -> list:
    """Skewness and excess kurtosis with normal-theory standard errors, per column."""
    X = np.asarray(samples, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    n = X.shape[0]
    if n < min_replicas:
        raise InsufficientReplicas(f"Gaussianity diagnostics need at least {min_replicas} replicas, got {n}")
    se_s, se_k = skew_standard_error(n), kurtosis_standard_error(n)
    out = []
    for j in range(X.shape[1]):
        col = X[:, j]
        out.append({
            "skewness": float(stats.skew(col)),
            "skewness_se": se_s,
            "excess_kurtosis": float(stats.kurtosis(col)),
            "kurtosis_se": se_k,
        })
    return out


def variance_estimate(values) -> EstimatorResult:
    """Unbiased variance with the standard error of the squared deviations."""
    x = np.asarray(values, dtype=np.float64)
    n = len(x)
    if n < 2:
        raise InsufficientReplicas("variance needs at least 2 replicas")
    d2 = (x - x.mean()) ** 2
    return EstimatorResult(float(x.var(ddof=1)), float(d2.std(ddof=1) / math.sqrt(n)), n)


def correlation_estimate(x, y) -> EstimatorResult:
    x, y = np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64)
    n = len(x)
    if n < 4:
        raise InsufficientReplicas("correlation needs at least 4 replicas")
    rho = float(np.corrcoef(x, y)[0, 1])
    return EstimatorResult(rho, (1.0 - rho * rho) / math.sqrt(n - 1), n)


def brownian_variance_check(m: IntensityModel, x: float, v: float, times: Sequence[float],
                            eta_samples=None, var_sigmas: float = 5.0, corr_sigmas: float = 4.0) -> dict:
    """Increments of the fluctuation field along the line ``(t, x + v t)``.

    ``eta_samples`` holds one column per time.  Each increment variance is
    compared with the second moment of the lines crossing that piece of the
    line; adjacent disjoint increments must be uncorrelated.
    """
    times = [float(t) for t in times]
    if not times:
        return {"increments": [], "correlations": [], "pass": True}
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ValueError("times must be strictly increasing")
    pts = [SpaceTimePoint(t, x + v * t) for t in times]
    eta = np.asarray(eta_samples, dtype=np.float64)
    if eta.shape[1] != len(times):
        raise ValueError("one sample column per time is required")
    inc = np.diff(eta, axis=1)
    report = {"increments": [], "correlations": []}
    ok = True
    for k in range(inc.shape[1]):
        target = lc_distance(m, pts[k], pts[k + 1])
        est = variance_estimate(inc[:, k])
        passed = abs(est.estimate - target) <= var_sigmas * est.std_error
        ok &= passed
        report["increments"].append({"t0": times[k], "t1": times[k + 1], "estimate": est.estimate,
                                     "std_error": est.std_error, "target": target, "pass": bool(passed)})
    for k in range(inc.shape[1] - 1):
        est = correlation_estimate(inc[:, k], inc[:, k + 1])
        passed = abs(est.estimate) <= corr_sigmas * est.std_error
        ok &= passed
        report["correlations"].append({"pair": [k, k + 1], "estimate": est.estimate,
                                       "std_error": est.std_error, "target": 0.0, "pass": bool(passed)})
    report["pass"] = bool(ok)
    return report


# ---------------------------------------------------------------------------
# replica driver


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def run_replicas(fn: Callable[[int], object], replicas: int, threads: int | None = None) -> list:
    """``[fn(0), ..., fn(replicas - 1)]`` in replica order, optionally on a thread pool."""
    threads = default_threads() if threads is None else max(1, int(threads))
    if threads == 1 or replicas < 2:
        return [fn(i) for i in range(replicas)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(replicas)))


def observation_spec(m: IntensityModel, eps: float, pts, seed: int, replica: int = 0,
                     extra=(), pad: float = 1.0) -> SampleSpec:
    """Sampling window covering all lines that reach the given points and positions."""
    pts = _points(pts)
    xs = [p.x for p in pts] + [float(e) for e in extra] + [0.0]
    horizon = max([abs(p.t) for p in pts] + [0.0])
    return SampleSpec(epsilon=eps, seed=seed, horizon=horizon, x_lo=min(xs), x_hi=max(xs),
                      pad=pad, replica=replica)


def eta_samples(m: IntensityModel, eps: float, pts, replicas: int, seed: int,
                threads: int | None = None) -> np.ndarray:
    """Replica x point matrix of fluctuation-field values."""
    from .sampler import sample

    pts = _points(pts)
    centre = macro_centres(m, pts)

    def one(i):
        c = sample(m, observation_spec(m, eps, pts, seed, i))
        return fluct_field(c, eps, m, pts, macro=centre)

    return np.array(run_replicas(one, replicas, threads))


def lln_errors(m: IntensityModel, eps_ladder: Sequence[float], pts, replicas: int, seed: int,
               threads: int | None = None) -> np.ndarray:
    """``|H^eps - H|`` with nested coupling: shape ``(replicas, len(eps_ladder), len(pts))``."""
    from .sampler import sample_nested

    pts = _points(pts)
    centre = macro_centres(m, pts)
    eps_ladder = [float(e) for e in eps_ladder]

    def one(i):
        spec = observation_spec(m, eps_ladder[-1], pts, seed, i)
        configs = sample_nested(m, eps_ladder, spec)
        rows = []
        for eps, c in zip(eps_ladder, configs):
            rows.append(np.abs(np.array([float(rescaled_field(c, eps, p.t, [p.x])[0]) for p in pts]) - centre))
        return np.array(rows)

    return np.array(run_replicas(one, replicas, threads))


__all__ = [
    "EstimatorResult", "CovarianceModel", "mean_estimate", "rescaled_field", "rescaled_positions",
    "empirical_measure", "fluct_field", "positional_fluctuation", "quasiparticle_lln_point",
    "microscopic_contract", "lc_distance", "lc_covariance", "check_psd", "jackknife",
    "estimate_covariance", "gaussianity_diagnostics", "variance_estimate", "correlation_estimate",
    "brownian_variance_check", "run_replicas", "observation_spec", "eta_samples", "lln_errors",
    "macro_centres",
]
