"""Finite-difference residuals of the kinetic equation on evolved grids."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from ..errors import GridTooCoarse
from .density import GridDensity


@dataclass(frozen=True)
class ResidualReport:
    norm_sup: float
    norm_l2: float
    continuity_sup: float
    continuity_l2: float
    grid: dict
    times: list

    def to_dict(self) -> dict:
        return asdict(self)


def _interior_mask(q, interior):
    mask = np.ones(len(q), dtype=bool)
    mask[0] = mask[-1] = False
    if interior is not None:
        mask &= (q >= interior[0]) & (q <= interior[1])
    return mask


def pde_residual(snapshots: Sequence[GridDensity], times: Sequence[float], interior=None,
                 free_gas: bool = False) -> ResidualReport:
    """Central-difference residual of ``d_t g + d_q (g v_eff) = 0``.

    ``snapshots`` share one uniform spatial grid and node set and sit at
    equally spaced ``times``.  The residual is evaluated at every interior
    time snapshot and spatial node inside ``interior``.  The L2 norm
    integrates over ``q`` with the grid step and over ``(v, r)`` with the node
    weights, then takes the largest value over times.  The continuity
    residual ``d_t sigma + d_q zeta`` is reported the same way.  With
    ``free_gas`` the effective velocity is the bare velocity.
    """
    if len(snapshots) < 3 or len(snapshots) != len(times):
        raise GridTooCoarse("need at least 3 time snapshots with matching times")
    times = np.asarray(times, dtype=np.float64)
    dts = np.diff(times)
    if np.any(dts <= 0) or not np.allclose(dts, dts[0], rtol=1e-9):
        raise GridTooCoarse("snapshot times must be equally spaced and increasing")
    dt = float(dts[0])
    first = snapshots[0]
    q = first.q
    for s in snapshots:
        if not (np.array_equal(s.q, q) and s.nodes.same_as(first.nodes)):
            raise GridTooCoarse("snapshots must share the spatial grid and node set")
    h = first.h
    nodes = first.nodes
    mask = _interior_mask(q, interior)
    inner = np.flatnonzero(mask)
    if len(inner) == 0:
        raise GridTooCoarse("no interior nodes in the requested window")

    sup = l2 = csup = cl2 = 0.0
    for j in range(1, len(snapshots) - 1):
        g = snapshots[j].table
        if free_gas:
            veff = np.broadcast_to(nodes.v, g.shape)
        else:
            s = snapshots[j].sigma_nodes()
            z = snapshots[j].zeta_nodes()
            veff = (nodes.v[None, :] - z[:, None]) / (1.0 - s[:, None])
        flux = g * veff
        dg = (snapshots[j + 1].table[inner] - snapshots[j - 1].table[inner]) / (2 * dt)
        dflux = (flux[inner + 1] - flux[inner - 1]) / (2 * h)
        res = dg + dflux
        sup = max(sup, float(np.max(np.abs(res))))
        l2 = max(l2, float(np.sqrt(h * np.sum(res ** 2 @ np.abs(nodes.w)))))
        ds = (snapshots[j + 1].sigma_nodes()[inner] - snapshots[j - 1].sigma_nodes()[inner]) / (2 * dt)
        zz = flux @ nodes.wr if free_gas else snapshots[j].zeta_nodes()
        dz = (zz[inner + 1] - zz[inner - 1]) / (2 * h)
        cres = ds + dz
        csup = max(csup, float(np.max(np.abs(cres))))
        cl2 = max(cl2, float(np.sqrt(h * np.sum(cres ** 2))))
    grid = {"q_lo": float(q[0]), "q_hi": float(q[-1]), "n_q": int(len(q)), "h": h,
            "n_nodes": int(len(nodes)), "interior": [float(q[inner[0]]), float(q[inner[-1]])]}
    return ResidualReport(sup, l2, csup, cl2, grid, [float(t) for t in times])
