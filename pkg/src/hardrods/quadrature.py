"""Adaptive Gauss-Legendre integration and monotone root finding."""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .errors import NotInvertible, QuadratureFailure

ABS_TOL = 1e-8
BUDGET = 1_000_000


@lru_cache(maxsize=32)
def gauss_legendre(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def _panel_rules(fn, lo, hi, order):
    """Whole-panel and two-half estimates for a batch of panels."""
    x, w = gauss_legendre(order)
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    quarter = 0.5 * half
    pts = np.concatenate([
        mid[:, None] + half[:, None] * x,
        (lo + quarter)[:, None] + quarter[:, None] * x,
        (mid + quarter)[:, None] + quarter[:, None] * x,
    ], axis=1)
    vals = np.asarray(fn(pts.ravel()), dtype=np.float64).reshape(pts.shape)
    k = len(x)
    whole = half * (vals[:, :k] @ w)
    halves = quarter * (vals[:, k:2 * k] @ w + vals[:, 2 * k:] @ w)
    return whole, halves, pts.size


def integrate(fn, a: float, b: float, breakpoints=(), tol: float = ABS_TOL,
              order: int = 10, budget: int = BUDGET) -> float:
    """Integrate a vectorized ``fn`` over ``[a, b]``.

    Panels start at the sorted breakpoints inside ``(a, b)`` and are bisected
    until the summed two-level error estimate is below ``tol``.  Raises
    ``QuadratureFailure`` when the evaluation budget runs out first.
    """
    if a == b:
        return 0.0
    sign = 1.0
    if a > b:
        a, b, sign = b, a, -1.0
    cuts = [a] + sorted(p for p in set(breakpoints) if a < p < b and np.isfinite(p)) + [b]
    lo = np.array(cuts[:-1], dtype=np.float64)
    hi = np.array(cuts[1:], dtype=np.float64)
    done = 0.0
    used = 0
    while len(lo):
        whole, halves, n = _panel_rules(fn, lo, hi, order)
        used += n
        err = np.abs(whole - halves)
        total_err = err.sum()
        share = tol * (hi - lo) / (b - a)
        if total_err <= tol:
            return sign * (done + halves.sum())
        ok = err <= share
        done += halves[ok].sum()
        lo, hi = lo[~ok], hi[~ok]
        if used > budget:
            raise QuadratureFailure(
                f"adaptive quadrature on [{a}, {b}] did not reach {tol:g} within {budget} evaluations")
        mid = 0.5 * (lo + hi)
        lo, hi = np.concatenate([lo, mid]), np.concatenate([mid, hi])
        if np.any(hi - lo <= 1e-15 * max(1.0, abs(a), abs(b))):
            raise QuadratureFailure(f"panel width underflow integrating on [{a}, {b}]")
    return sign * done


def composite_gl(a: float, b: float, breakpoints=(), n: int = 32):
    """Nodes and weights of a fixed composite rule split at the breakpoints."""
    cuts = [a] + sorted(p for p in set(breakpoints) if a < p < b) + [b]
    x, w = gauss_legendre(n)
    nodes, weights = [], []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        half = 0.5 * (hi - lo)
        nodes.append(0.5 * (lo + hi) + half * x)
        weights.append(half * w)
    return np.concatenate(nodes), np.concatenate(weights)


def solve_increasing(fn, dfn, target, guess=None, lo=None, hi=None,
                     tol: float = 1e-12, bisect_width: float = 1e-6, max_iter: int = 200):
    """Solve ``fn(x) = target`` elementwise for increasing ``fn``.

    The root is bracketed (the bracket grows geometrically around ``guess``
    when not given), bisected to ``bisect_width`` and polished with Newton
    steps using ``dfn`` until steps fall below ``tol`` relative to ``1 + |x|``.
    Newton steps leaving the bracket fall back to bisection.
    """
    target = np.asarray(target, dtype=np.float64)
    shape = target.shape
    y = target.reshape(-1)
    x0 = y.copy() if guess is None else np.broadcast_to(np.asarray(guess, dtype=np.float64), shape).reshape(-1).copy()
    if lo is None or hi is None:
        step = np.ones_like(y)
        lo_ = x0 - step
        hi_ = x0 + step
        for _ in range(200):
            f_lo = fn(lo_) - y
            bad = f_lo > 0
            if not bad.any():
                break
            step = np.where(bad, 2 * step, step)
            lo_ = np.where(bad, x0 - step, lo_)
        else:
            raise NotInvertible("could not bracket the root from below")
        step = np.ones_like(y)
        for _ in range(200):
            f_hi = fn(hi_) - y
            bad = f_hi < 0
            if not bad.any():
                break
            step = np.where(bad, 2 * step, step)
            hi_ = np.where(bad, x0 + step, hi_)
        else:
            raise NotInvertible("could not bracket the root from above")
    else:
        lo_ = np.broadcast_to(np.asarray(lo, dtype=np.float64), y.shape).copy()
        hi_ = np.broadcast_to(np.asarray(hi, dtype=np.float64), y.shape).copy()
    for _ in range(max_iter):
        wide = (hi_ - lo_) > bisect_width
        if not wide.any():
            break
        mid = 0.5 * (lo_ + hi_)
        below = (fn(mid) - y) < 0
        lo_ = np.where(wide & below, mid, lo_)
        hi_ = np.where(wide & ~below, mid, hi_)
    x = 0.5 * (lo_ + hi_)
    for _ in range(max_iter):
        f = fn(x) - y
        d = dfn(x)
        if np.any(d <= 0):
            raise NotInvertible("map is not increasing at the current iterate")
        below = f < 0
        lo_ = np.where(below, np.maximum(lo_, x), lo_)
        hi_ = np.where(~below, np.minimum(hi_, x), hi_)
        nx = x - f / d
        out = (nx < lo_) | (nx > hi_)
        nx = np.where(out, 0.5 * (lo_ + hi_), nx)
        step = np.abs(nx - x)
        x = nx
        if np.all(step <= tol * (1.0 + np.abs(x))):
            break
    return x.reshape(shape) if shape else float(x[0])
