"""Macroscopic flows, effective velocity and the hard-rod evolution of densities."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import NotInvertible, StepTooLarge
from ..quadrature import solve_increasing
from .density import (SIGMA_GUARD, DensityField, GridDensity, _Dilated, density_contract,
                      density_dilate, density_shift, density_transport, dilate_inverse,
                      dilate_point, guard_sigma)


# node sums of a density with sigma = 1 can land a few ulps below 1
SIGMA_ROUNDING = 1e-12


def sigma(d: DensityField, x):
    return d.sigma(x)


def zeta(d: DensityField, x):
    return d.zeta(x)


def node_flow(f: DensityField, x, v: float, t: float, parts: bool = False):
    """Mass flow ``j_f(x, v, t)`` through the ballistic segment from ``(0, x)`` to ``(t, x + v t)``.

    With ``parts=True`` returns ``(j, j_plus, j_minus)``: nodes slower than
    ``v`` are overtaken (plus), faster nodes overtake (minus).
    """
    scalar = np.ndim(x) == 0
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    nv = f.nodes.v
    Q = x[:, None] + (v - nv) * t
    inc = (f.primitive_at(Q) - f.primitive(x)) * f.nodes.wr
    j = inc.sum(axis=1)
    if not parts:
        return float(j[0]) if scalar else j
    jp = inc[:, nv < v].sum(axis=1)
    jm = -inc[:, nv > v].sum(axis=1)
    if scalar:
        return float(j[0]), float(jp[0]), float(jm[0])
    return j, jp, jm


def effective_velocity(d: DensityField, q, v, check: bool = True):
    """``(v - zeta) / (1 - sigma)``, cross-checked against the defining form.

    The defining form is ``v + int r (v - w) d / (1 - int r d)``.
    """
    q = np.asarray(q, dtype=np.float64)
    vals = d.values(q.reshape(-1))
    s = vals @ d.nodes.wr
    z = vals @ d.nodes.wvr
    if np.any(s >= 1.0 - SIGMA_ROUNDING):
        raise NotInvertible("effective velocity needs sigma < 1")
    v = np.asarray(v, dtype=np.float64)
    vb = np.broadcast_to(v, q.shape).reshape(-1)
    out = (vb - z) / (1.0 - s)
    if check:
        rel = np.einsum("nk,k,nk->n", vals, d.nodes.wr, vb[:, None] - d.nodes.v[None, :])
        alt = vb + rel / (1.0 - s)
        if not np.allclose(out, alt, rtol=1e-10, atol=1e-10):
            raise NotInvertible("effective velocity forms disagree")
    out = out.reshape(np.broadcast(q, v).shape)
    return float(out) if out.ndim == 0 else out


def effective_velocity_from_moments(sig, zet, v):
    sig = np.asarray(sig, dtype=np.float64)
    if np.any(sig >= 1.0 - SIGMA_ROUNDING):
        raise NotInvertible("effective velocity needs sigma < 1")
    return (np.asarray(v) - zet) / (1.0 - sig)


# ---------------------------------------------------------------------------
# evolution of a dilated density


def evolve_density(g: DensityField, t: float) -> DensityField:
    """``S_{o_t} D_0 T_t C_0 g`` with ``o_t = j_{C_0 g}(0, 0, t)``.

    Gridded inputs are re-gridded on the same nodes after every operator.
    """
    if t == 0:
        return g
    if not g.dilated:
        raise NotInvertible("evolution acts on dilated densities")
    guard_sigma(g)
    f = density_contract(g, 0.0)
    o_t = node_flow(f, 0.0, 0.0, t)
    return density_shift(density_dilate(density_transport(f, t), 0.0), o_t)


def evolve_density_pushforward(g: DensityField, t: float, q=None) -> GridDensity:
    """Pushforward form ``g(u^{-1}(q), v, r) d/dq u^{-1}(q)`` on the nodes ``q``.

    ``u(q') = Y(C_{g,0}(q') + v t)`` where ``Y`` is the dilation map of the
    transported gas shifted by ``o_t``; ``Y`` is shared by all nodes, so one
    inversion per output point suffices.
    """
    if q is None:
        if not isinstance(g, GridDensity):
            raise ValueError("output nodes are required for analytic densities")
        q = g.q
    q = np.asarray(q, dtype=np.float64)
    if t == 0:
        vals, prim = g.values_and_primitive(q)
        return GridDensity(q, vals, g.nodes, prim)
    guard_sigma(g)
    f = density_contract(g, 0.0)
    o_t = node_flow(f, 0.0, 0.0, t)
    vt = g.nodes.v * t
    wr = g.nodes.wr
    base = f.primitive_at(-vt[None, :])[0]

    def Y(p):
        return p + o_t + (f.primitive_at(p[:, None] - vt) - base) @ wr

    def dY(p):
        return 1.0 + f.values_at(p[:, None] - vt) @ wr

    p = solve_increasing(Y, dY, q)
    X = p[:, None] - vt
    qprime = dilate_point(f, 0.0, X)
    sig_T = dY(p) - 1.0
    gv = g.values_at(qprime)
    sg = g.sigma(qprime)
    vals = gv / ((1.0 - sg) * (1.0 + sig_T)[:, None])
    return GridDensity(q, vals, g.nodes)


# ---------------------------------------------------------------------------
# closed-form route through the gas density


class ClosedFormEvolution:
    """Time-``t`` quantities of ``U_t g`` computed from the gas ``f = C_0 g``.

    The macroscopic field is ``H(t, x) = sum_k w_k r_k (F_k(x - v_k t) - F_k(0))``
    with ``F_k`` the spatial primitive of ``f`` at node ``k``.
    """

    def __init__(self, f: DensityField):
        self.f = f
        self.nodes = f.nodes
        self._p0 = f.primitive(np.zeros(1))[0]

    @classmethod
    def from_dilated(cls, g: DensityField) -> "ClosedFormEvolution":
        if isinstance(g, _Dilated) and g.a == 0.0:
            return cls(g.inner)
        guard_sigma(g)
        return cls(density_contract(g, 0.0))

    def field(self, t: float, x):
        x = np.asarray(x, dtype=np.float64)
        flat = x.reshape(-1)
        out = (self.f.primitive_at(flat[:, None] - self.nodes.v * t) - self._p0) @ self.nodes.wr
        return out.reshape(x.shape) if x.ndim else float(out[0])

    def transported_moments(self, t: float, p):
        """``sigma`` and ``zeta`` of ``T_t f`` at ``p``."""
        p = np.atleast_1d(np.asarray(p, dtype=np.float64))
        vals = self.f.values_at(p[:, None] - self.nodes.v * t)
        return vals @ self.nodes.wr, vals @ self.nodes.wvr

    def label(self, t: float, q, guess=None):
        """Solve ``p + H(t, p) = q``: the free position behind rod position ``q``."""
        q = np.atleast_1d(np.asarray(q, dtype=np.float64))
        return solve_increasing(lambda p: p + self.field(t, p),
                                lambda p: 1.0 + self.transported_moments(t, p)[0], q, guess=guess)

    def position(self, v: float, t: float, x):
        """``y_{v,t}(x) = x + v t + H(t, x + v t)``."""
        x = np.asarray(x, dtype=np.float64)
        return x + v * t + self.field(t, x + v * t)

    def trajectory(self, q, v: float, t: float):
        """``u_{g,v,t}(q)``: contract the label, then move it."""
        x = dilate_inverse(self.f, 0.0, np.asarray(q, dtype=np.float64))
        return self.position(v, t, x)

    def moments(self, t: float, q, guess=None):
        """``sigma`` and ``zeta`` of ``U_t g`` at ``q`` and the labels used."""
        p = self.label(t, q, guess=guess)
        s, z = self.transported_moments(t, p)
        return s / (1.0 + s), z / (1.0 + s), p

    def values(self, t: float, q):
        p = self.label(t, q)
        vals = self.f.values_at(p[:, None] - self.nodes.v * t)
        return vals / (1.0 + vals @ self.nodes.wr)[:, None]

    def effective_velocity(self, t: float, q, v: float, guess=None):
        p = self.label(t, q, guess=guess)
        s, z = self.transported_moments(t, p)
        return v * (1.0 + s) - z, s / (1.0 + s), p


@dataclass(frozen=True)
class MacroTrajectory:
    q: float
    v: float
    times: np.ndarray
    positions: np.ndarray

    @property
    def endpoint(self) -> float:
        return float(self.positions[-1])


def characteristics_integrate(g: DensityField, q: float, v: float, t_end: float, step: float,
                              guard: float = SIGMA_GUARD) -> MacroTrajectory:
    """Classical RK4 for ``dq/dt = v_eff(q, v, t)`` at a fixed step.

    The density at intermediate times comes from the closed-form route.
    Raises ``StepTooLarge`` when ``sigma`` along the path reaches ``guard``.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    if t_end == 0:
        return MacroTrajectory(q, v, np.zeros(1), np.array([float(q)]))
    cf = ClosedFormEvolution.from_dilated(g)
    n = max(1, int(math.ceil(abs(t_end) / step - 1e-9)))
    h = t_end / n
    label = [None]

    def rhs(s, y):
        ve, sig, p = cf.effective_velocity(s, np.array([y]), v, guess=label[0])
        if sig[0] >= guard:
            raise StepTooLarge(f"sigma = {sig[0]:.6g} reached the guard {guard} at time {s}")
        label[0] = p
        return float(ve[0])

    times = np.linspace(0.0, t_end, n + 1)
    pos = np.empty(n + 1)
    pos[0] = y = float(q)
    for i in range(n):
        s = times[i]
        k1 = rhs(s, y)
        k2 = rhs(s + h / 2, y + h * k1 / 2)
        k3 = rhs(s + h / 2, y + h * k2 / 2)
        k4 = rhs(s + h, y + h * k3)
        y = y + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
        pos[i + 1] = y
    return MacroTrajectory(q, v, times, pos)
