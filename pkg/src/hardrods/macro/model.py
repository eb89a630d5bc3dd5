"""Macroscopic quantities of an intensity model by direct quadrature.

These work from the product components of the model, with the spatial
integral in closed form through the profile antiderivative and the velocity
integral by adaptive Gauss-Legendre.  They are independent of the node-based
densities in ``density``.
"""

from __future__ import annotations

import numpy as np

from ..core import ORIGIN, SpaceTimePoint, segment
from ..errors import NotInvertible, QuadratureFailure
from ..observables import Observable
from ..quadrature import composite_gl, integrate, solve_increasing
from ..sampler import AtomLengths, Component, IntensityModel, mu_segment

TOL = 1e-10


def _breaks(c: Component, pts):
    """Velocities where an integrand ``rho(p - w t)`` meets a profile edge."""
    lo, hi = c.velocity.support
    out = [lo, hi]
    for p, t in pts:
        if t != 0:
            out.extend((p - e) / t for e in c.profile.breakpoints())
    return [w for w in out if lo <= w <= hi]


def _v_integral(c: Component, fn, breaks=(), tol=TOL):
    lo, hi = c.velocity.support
    if lo == hi:
        return float(fn(np.array([lo]))[0])
    return integrate(lambda w: c.velocity.pdf(w) * fn(w), lo, hi, breakpoints=breaks, tol=tol)


def macro_field_H(m: IntensityModel, t: float, x: float) -> float:
    """``H(t, x) = sum_c E[R] int p_V(w) (R_c(x - w t) - R_c(0)) dw``."""
    total = 0.0
    for c in m.components:
        mean_r = c.lengths.moment(1)
        if mean_r == 0:
            continue
        R = c.profile.antiderivative
        r0 = R(np.float64(0.0))
        val = _v_integral(c, lambda w: R(x - w * t) - r0, _breaks(c, [(x, t)]))
        total += mean_r * val
    return float(total)


def macro_field_H_segment(m: IntensityModel, t: float, x: float) -> float:
    """The same field as Plus minus Minus line-measure moments of the segment from the origin."""
    s = segment(ORIGIN, SpaceTimePoint(t, x))
    return mu_segment(m, s, 1, "plus") - mu_segment(m, s, 1, "minus")


def macro_flow(m: IntensityModel, x: float, v: float, t: float):
    """``(j, j_plus, j_minus)`` through the segment from ``(0, x)`` to ``(t, x + v t)``.

    ``j_plus`` integrates lines slower than ``v`` starting in
    ``[x, x + (v - w) t]``, ``j_minus`` faster lines starting in
    ``[x + (v - w) t, x]``.
    """
    jp = jm = 0.0
    if t == 0:
        return 0.0, 0.0, 0.0
    for c in m.components:
        mean_r = c.lengths.moment(1)
        if mean_r == 0:
            continue
        R = c.profile.antiderivative
        rx = R(np.float64(x))
        lo, hi = c.velocity.support
        br = _breaks(c, [(x + v * t, t)])
        if lo == hi:
            val = float(R(x + (v - lo) * t) - rx)
            if lo < v:
                jp += mean_r * val
            elif lo > v:
                jm -= mean_r * val
            continue
        fn = lambda w: c.velocity.pdf(w) * (R(x + (v - w) * t) - rx)
        if lo < v:
            jp += mean_r * integrate(fn, lo, min(v, hi), breakpoints=br, tol=TOL)
        if hi > v:
            jm -= mean_r * integrate(fn, max(v, lo), hi, breakpoints=br, tol=TOL)
    return float(jp - jm), float(jp), float(jm)


def transported_sigma(m: IntensityModel, t: float, p: float) -> float:
    """``sigma`` of the free-streamed gas at ``p``: ``sum_c E[R] int p_V(w) rho_c(p - w t) dw``."""
    total = 0.0
    for c in m.components:
        mean_r = c.lengths.moment(1)
        if mean_r == 0:
            continue
        total += mean_r * _v_integral(c, lambda w: c.profile.density(p - w * t), _breaks(c, [(p, t)]))
    return float(total)


def macro_contract_label(m: IntensityModel, q):
    """Solve ``x + int_0^x sigma_f = q`` (the contraction at base 0 of the dilated density)."""
    return solve_increasing(lambda x: x + m.sigma_primitive(x), lambda x: 1.0 + m.sigma(x),
                            np.asarray(q, dtype=np.float64))


def macro_position(m: IntensityModel, x: float, v: float, t: float) -> float:
    """``y_{v,t}(x) = x + v t + H(t, x + v t)``."""
    return x + v * t + macro_field_H(m, t, x + v * t)


def macro_trajectory_closed(m: IntensityModel, q: float, v: float, t: float,
                            tol: float = 1e-8, both: bool = False):
    """``u_{v,t}(q)`` through the field and through the mass flow; both must agree."""
    if m.components and np.any(m.sigma(np.array([q])) <= 0):
        raise NotInvertible("contraction of the label needs a positive mass density")
    x = float(macro_contract_label(m, q))
    via_field = macro_position(m, x, v, t)
    via_flow = float(q + v * t + macro_flow(m, x, v, t)[0])
    if abs(via_field - via_flow) > tol * (1.0 + abs(via_field)):
        raise QuadratureFailure(f"trajectory routes disagree: {via_field!r} vs {via_flow!r}")
    return (via_field, via_flow) if both else via_field


def macro_label(m: IntensityModel, t: float, q: float) -> float:
    """Solve ``p + H(t, p) = q`` with the adaptive field."""
    fn = np.vectorize(lambda p: p + macro_field_H(m, t, float(p)))
    dfn = np.vectorize(lambda p: 1.0 + transported_sigma(m, t, float(p)))
    return float(solve_increasing(fn, dfn, np.array([q]))[0])


# ---------------------------------------------------------------------------
# kappa


def _mark_length_expectation(c: Component, obs: Observable, v):
    """``E_R[R * mark(v, R)]`` for each velocity in ``v``."""
    v = np.asarray(v, dtype=np.float64)
    if isinstance(c.lengths, AtomLengths):
        r = np.array(c.lengths.values)
        p = np.array(c.lengths.probs)
        return obs.mark(v[:, None], r[None, :]) * r[None, :] @ p
    lo, hi = c.lengths.support
    r, w = composite_gl(lo, hi, [b for b in obs.r_breaks if lo < b < hi], n=24)
    return obs.mark(v[:, None], r[None, :]) * r[None, :] @ (w * c.lengths.pdf(r))


def _v_nodes(c: Component, obs: Observable, extra=(), n=48):
    lo, hi = c.velocity.support
    br = [b for b in tuple(obs.v_breaks) + tuple(extra) if lo < b < hi]
    return composite_gl(lo, hi, br, n=n)


def kappa(m: IntensityModel, t: float, obs: Observable, both: bool = False, tol: float = 1e-6):
    """``kappa_t(phi)``: length-weighted mass of quasiparticles inside ``[a, b]`` at time ``t``.

    Route one integrates the gas over the starting points whose trajectory
    ends in ``[a, b]``; route two integrates the evolved density ``g_t`` over
    ``[a, b]``.  The two must agree to ``tol``.
    """
    if not m.components:
        return (0.0, 0.0) if both else 0.0
    for c in m.components:
        obs.check(c.velocity.support, c.lengths.support)
    pa = macro_label(m, t, obs.a)
    pb = macro_label(m, t, obs.b)

    route_free = 0.0
    for c in m.components:
        R = c.profile.antiderivative
        lo, hi = c.velocity.support

        def fn(v, c=c, R=R):
            return _mark_length_expectation(c, obs, v) * (R(pb - v * t) - R(pa - v * t))

        if lo == hi:
            route_free += float(fn(np.array([lo]))[0])
        else:
            route_free += integrate(lambda v, c=c, fn=fn: c.velocity.pdf(v) * fn(v), lo, hi,
                                    breakpoints=list(obs.v_breaks) + _breaks(c, [(pa, t), (pb, t)]),
                                    tol=1e-11)

    # route two: vectorized label solve with fixed composite rules in w
    comp_nodes = [_v_nodes(c, obs) for c in m.components]
    comp_marks = [_mark_length_expectation(c, obs, w) for c, (w, _) in zip(m.components, comp_nodes)]

    def field_fixed(p):
        p = np.asarray(p, dtype=np.float64)
        out = np.zeros_like(p)
        for c, (w, wt) in zip(m.components, comp_nodes):
            R = c.profile.antiderivative
            out += c.lengths.moment(1) * ((R(p[:, None] - w * t) - R(np.float64(0.0))) @ (wt * c.velocity.pdf(w)))
        return out

    def sigma_fixed(p):
        out = np.zeros_like(p)
        for c, (w, wt) in zip(m.components, comp_nodes):
            out += c.lengths.moment(1) * (c.profile.density(p[:, None] - w * t) @ (wt * c.velocity.pdf(w)))
        return out

    def integrand(q):
        p = solve_increasing(lambda p: p + field_fixed(p), lambda p: 1.0 + sigma_fixed(p), q)
        num = np.zeros_like(q)
        for c, (w, wt), mk in zip(m.components, comp_nodes, comp_marks):
            num += c.profile.density(p[:, None] - w * t) @ (wt * c.velocity.pdf(w) * mk)
        return num / (1.0 + sigma_fixed(p))

    route_density = float(integrate(integrand, obs.a, obs.b, tol=1e-11))
    if abs(route_free - route_density) > tol * max(1.0, abs(route_free)):
        raise QuadratureFailure(f"kappa routes disagree: {route_free!r} vs {route_density!r}")
    route_free = float(route_free)
    return (route_free, route_density) if both else route_free
