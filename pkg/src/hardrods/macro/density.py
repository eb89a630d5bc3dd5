"""Macroscopic phase-space densities ``g(q, v, r)``.

The ``(v, r)`` dependence lives on a fixed set of quadrature nodes with
weights, so moments such as ``sigma`` and ``zeta`` are weighted node sums.
Every density exposes its values and a per-node primitive in the spatial
variable.  Dilation, contraction, transport and shift are changes of the
spatial variable, and the primitive transforms by plain composition under
each of them, which keeps mass bookkeeping exact.

Densities are either analytic (built from an intensity model, or lazily
composed from another density) or gridded on uniform spatial nodes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import GridTooCoarse, NotInvertible
from ..quadrature import gauss_legendre, solve_increasing
from ..sampler import AtomLengths, IntensityModel

SIGMA_GUARD = 0.98


@dataclass(frozen=True)
class NodeSet:
    """Quadrature nodes in ``(v, r)``; ``w`` integrates ``dv dr`` (atoms count once)."""

    v: np.ndarray
    r: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        for name in ("v", "r", "w"):
            arr = np.array(getattr(self, name), dtype=np.float64).reshape(-1)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __len__(self):
        return len(self.v)

    @property
    def wr(self):
        return self.w * self.r

    @property
    def wvr(self):
        return self.w * self.v * self.r

    def same_as(self, other: "NodeSet") -> bool:
        return (np.array_equal(self.v, other.v) and np.array_equal(self.r, other.r)
                and np.array_equal(self.w, other.w))


def model_nodes(m: IntensityModel, n_v: int = 32, n_r: int = 8):
    """Nodes for every component plus per-node scale and component index.

    The density at node ``k`` is ``rho_c(x) * scale[k]`` where ``scale`` is
    the velocity density times the length density (or atom probability).
    """
    vs, rs, ws, scale, comp = [], [], [], [], []
    for ci, c in enumerate(m.components):
        lo, hi = c.velocity.support
        if lo == hi:
            raise ValueError("degenerate velocity support has no density in v")
        xg, wg = gauss_legendre(n_v)
        half = 0.5 * (hi - lo)
        vv = 0.5 * (lo + hi) + half * xg
        wv = half * wg
        pv = c.velocity.pdf(vv)
        if isinstance(c.lengths, AtomLengths):
            rr = np.array(c.lengths.values)
            wr = np.ones_like(rr)
            pr = np.array(c.lengths.probs)
        else:
            rr, wprob = c.lengths.nodes(n_r)
            span = c.lengths.hi - c.lengths.lo
            wr = wprob * span
            pr = c.lengths.pdf(rr)
        V, R = np.meshgrid(vv, rr, indexing="ij")
        vs.append(V.ravel())
        rs.append(R.ravel())
        ws.append(np.outer(wv, wr).ravel())
        scale.append(np.outer(pv, pr).ravel())
        comp.append(np.full(V.size, ci))
    if not vs:
        return NodeSet([0.0], [0.0], [0.0]), np.zeros(1), np.zeros(1, dtype=int)
    return (NodeSet(np.concatenate(vs), np.concatenate(rs), np.concatenate(ws)),
            np.concatenate(scale), np.concatenate(comp))


class DensityField:
    """Base class.  Subclasses implement ``values_at`` and ``primitive_at``.

    ``values_at(Q)`` takes an ``(n, K)`` array of spatial points, one column
    per node, and returns the density there.  ``values(q)`` is the common
    case where all nodes share the points ``q``.
    """

    nodes: NodeSet

    # -- evaluation ------------------------------------------------------
    def values_at(self, Q) -> np.ndarray:
        raise NotImplementedError

    def primitive_at(self, Q) -> np.ndarray:
        raise NotImplementedError

    def values(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=np.float64).reshape(-1)
        return self.values_at(np.repeat(q[:, None], len(self.nodes), axis=1))

    def values_and_primitive(self, q):
        return self.values(q), self.primitive(q)

    def primitive(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=np.float64).reshape(-1)
        return self.primitive_at(np.repeat(q[:, None], len(self.nodes), axis=1))

    def _moment(self, q, weights, prim=False):
        scalar = np.ndim(q) == 0
        q = np.atleast_1d(np.asarray(q, dtype=np.float64))
        tab = self.primitive(q.ravel()) if prim else self.values(q.ravel())
        out = (tab @ weights).reshape(q.shape)
        return float(out[0]) if scalar else out

    def sigma(self, q):
        """Mass density ``int r g dv dr``."""
        return self._moment(q, self.nodes.wr)

    def zeta(self, q):
        """Momentum density ``int v r g dv dr``."""
        return self._moment(q, self.nodes.wvr)

    def sigma_primitive(self, q):
        """A primitive of ``sigma`` (differences give ``int sigma``)."""
        return self._moment(q, self.nodes.wr, prim=True)

    def mass(self, a, b):
        """``int_a^b sigma``."""
        return self.sigma_primitive(b) - self.sigma_primitive(a)

    # -- bounds and flags ---------------------------------------------------
    def column_sup(self) -> np.ndarray:
        """Upper bounds of each node column."""
        raise NotImplementedError

    def sigma_bound(self) -> float:
        """Upper bound of ``sigma`` over the line."""
        return float(np.sum(np.maximum(self.nodes.wr, 0.0) * self.column_sup()))

    @property
    def dilated(self) -> bool:
        return self.sigma_bound() < 1.0


class ModelDensity(DensityField):
    """Exact density of an intensity model on quadrature nodes."""

    def __init__(self, model: IntensityModel, n_v: int = 32, n_r: int = 8):
        self.model = model
        self.nodes, self.scale, self.comp = model_nodes(model, n_v, n_r)
        self._profiles = [c.profile for c in model.components]

    def _apply(self, Q, method):
        Q = np.asarray(Q, dtype=np.float64)
        out = np.zeros(Q.shape)
        for ci, prof in enumerate(self._profiles):
            cols = self.comp == ci
            out[:, cols] = getattr(prof, method)(Q[:, cols]) * self.scale[cols]
        return out

    def values_at(self, Q):
        return self._apply(Q, "density")

    def primitive_at(self, Q):
        return self._apply(Q, "antiderivative")

    def values(self, q):
        q = np.asarray(q, dtype=np.float64).reshape(-1)
        out = np.zeros((len(q), len(self.nodes)))
        for ci, prof in enumerate(self._profiles):
            cols = self.comp == ci
            out[:, cols] = prof.density(q)[:, None] * self.scale[cols]
        return out

    def primitive(self, q):
        q = np.asarray(q, dtype=np.float64).reshape(-1)
        out = np.zeros((len(q), len(self.nodes)))
        for ci, prof in enumerate(self._profiles):
            cols = self.comp == ci
            out[:, cols] = prof.antiderivative(q)[:, None] * self.scale[cols]
        return out

    def column_sup(self):
        sups = np.array([p.sup() for p in self._profiles] or [0.0])
        return sups[self.comp] * self.scale if self._profiles else np.zeros(len(self.nodes))

    def sigma_bound(self) -> float:
        # exact in the model moments, so that sigma = 1 is not rounded below 1
        total = 0.0
        for c in self.model.components:
            positive_mean = 0.5 * (c.lengths.moment(1) + c.lengths.abs_moment(1))
            total += positive_mean * c.profile.sup()
        return float(total)


class ScaledDensity(DensityField):
    """``c * inner``."""

    def __init__(self, inner: DensityField, factor: float):
        self.inner, self.factor, self.nodes = inner, float(factor), inner.nodes

    def values_at(self, Q):
        return self.factor * self.inner.values_at(Q)

    def primitive_at(self, Q):
        return self.factor * self.inner.primitive_at(Q)

    def values(self, q):
        return self.factor * self.inner.values(q)

    def primitive(self, q):
        return self.factor * self.inner.primitive(q)

    def column_sup(self):
        return abs(self.factor) * self.inner.column_sup()


# ---------------------------------------------------------------------------
# gridded densities


def _lagrange_weights(s):
    """Cubic Lagrange weights on nodes 0, 1, 2, 3 at local coordinate ``s``."""
    s0, s1, s2, s3 = s, s - 1.0, s - 2.0, s - 3.0
    return (-s1 * s2 * s3 / 6.0, s0 * s2 * s3 / 2.0, -s0 * s1 * s3 / 2.0, s0 * s1 * s2 / 6.0)


class GridDensity(DensityField):
    """Density on a uniform spatial grid with 4-point cubic interpolation.

    Outside the grid the values are extended by their edge values and the
    primitive linearly, matching a density that is flat beyond the grid.
    """

    def __init__(self, q, values, nodes: NodeSet, primitive=None, dilated: bool | None = None):
        q = np.asarray(q, dtype=np.float64).reshape(-1)
        values = np.asarray(values, dtype=np.float64)
        if len(q) < 4:
            raise GridTooCoarse("a grid needs at least 4 spatial nodes")
        h = np.diff(q)
        if not np.allclose(h, h[0], rtol=1e-9, atol=0):
            raise GridTooCoarse("spatial grid must be uniform")
        if values.shape != (len(q), len(nodes)):
            raise ValueError(f"values shape {values.shape} does not match grid {(len(q), len(nodes))}")
        self.q = q
        self.h = float((q[-1] - q[0]) / (len(q) - 1))
        self.nodes = nodes
        self.table = values
        self.prim_table = cumulative_primitive(values, self.h) if primitive is None else np.asarray(primitive, dtype=np.float64)
        self._dilated = dilated
        self._moment_tables = {}
        self.q.setflags(write=False)

    def _interp(self, table, Q, linear_tail: bool, tail=None):
        Q = np.asarray(Q, dtype=np.float64)
        n = len(self.q)
        pos = (Q - self.q[0]) / self.h
        j0 = np.clip(np.floor(pos).astype(np.int64) - 1, 0, n - 4)
        s = np.clip(pos, 0.0, n - 1.0) - j0
        cols = np.broadcast_to(np.arange(Q.shape[1]), Q.shape)
        w = _lagrange_weights(s)
        out = sum(w[i] * table[j0 + i, cols] for i in range(4))
        if linear_tail:
            slope = self.table if tail is None else tail
            lo = pos < 0
            hi = pos > n - 1
            if lo.any() or hi.any():
                out = np.where(lo, table[0, cols] + (Q - self.q[0]) * slope[0, cols], out)
                out = np.where(hi, table[-1, cols] + (Q - self.q[-1]) * slope[-1, cols], out)
        return out

    def values_at(self, Q):
        return self._interp(self.table, Q, False)

    def primitive_at(self, Q):
        return self._interp(self.prim_table, Q, True)

    def column_sup(self):
        return np.max(self.table, axis=0)

    def sigma_bound(self) -> float:
        return float(np.max(self.table @ self.nodes.wr))

    @property
    def dilated(self) -> bool:
        if self._dilated is not None:
            return self._dilated
        return self.sigma_bound() < 1.0

    def _moment(self, q, weights, prim=False):
        # interpolation is linear, so moments interpolate their own node tables
        key = (weights.tobytes(), prim)
        tab = self._moment_tables.get(key)
        if tab is None:
            tab = ((self.prim_table if prim else self.table) @ weights)[:, None]
            self._moment_tables[key] = tab
        scalar = np.ndim(q) == 0
        q = np.atleast_1d(np.asarray(q, dtype=np.float64))
        flat = q.reshape(-1, 1)
        out = self._interp(tab, flat, prim, tail=(self.table @ weights)[:, None] if prim else None)
        out = out.reshape(q.shape)
        return float(out[0]) if scalar else out

    def sigma_nodes(self):
        return self.table @ self.nodes.wr

    def zeta_nodes(self):
        return self.table @ self.nodes.wvr


def cumulative_primitive(values, h: float) -> np.ndarray:
    """Exact integral of the cubic interpolant, cumulated from the first node."""
    v = np.asarray(values, dtype=np.float64)
    n = v.shape[0]
    inc = np.empty((n - 1,) + v.shape[1:])
    inc[0] = h * (9 * v[0] + 19 * v[1] - 5 * v[2] + v[3]) / 24.0
    inc[-1] = h * (9 * v[-1] + 19 * v[-2] - 5 * v[-3] + v[-4]) / 24.0
    if n > 3:
        inc[1:-1] = h * (-v[:-3] + 13 * v[1:-2] + 13 * v[2:-1] - v[3:]) / 24.0
    return np.concatenate([np.zeros((1,) + v.shape[1:]), np.cumsum(inc, axis=0)])


def uniform_grid(lo: float, hi: float, n: int) -> np.ndarray:
    return np.linspace(lo, hi, n)


def to_grid(d: DensityField, q, dilated: bool | None = None) -> GridDensity:
    """Sample values and primitive of ``d`` on the nodes ``q``."""
    q = np.asarray(q, dtype=np.float64)
    if dilated is None and isinstance(d, (_Dilated,)):
        dilated = True
    vals, prim = d.values_and_primitive(q)
    return GridDensity(q, vals, d.nodes, prim, dilated=dilated)


# ---------------------------------------------------------------------------
# lazily composed densities


class _Shifted(DensityField):
    def __init__(self, inner, a):
        self.inner, self.a, self.nodes = inner, float(a), inner.nodes

    def values_at(self, Q):
        return self.inner.values_at(np.asarray(Q) - self.a)

    def primitive_at(self, Q):
        return self.inner.primitive_at(np.asarray(Q) - self.a)

    def values(self, q):
        return self.inner.values(np.asarray(q, dtype=np.float64).reshape(-1) - self.a)

    def primitive(self, q):
        return self.inner.primitive(np.asarray(q, dtype=np.float64).reshape(-1) - self.a)

    def column_sup(self):
        return self.inner.column_sup()

    def sigma_bound(self):
        return self.inner.sigma_bound()


class _Transported(DensityField):
    def __init__(self, inner, t):
        self.inner, self.t, self.nodes = inner, float(t), inner.nodes

    def values_at(self, Q):
        return self.inner.values_at(np.asarray(Q) - self.nodes.v * self.t)

    def primitive_at(self, Q):
        return self.inner.primitive_at(np.asarray(Q) - self.nodes.v * self.t)

    def column_sup(self):
        return self.inner.column_sup()


def dilate_point(d: DensityField, a, b):
    """``D_{d,a}(b) = b + int_a^b sigma_d``."""
    return b + (d.sigma_primitive(b) - d.sigma_primitive(a))


def contract_point(d: DensityField, a, b):
    """``C_{d,a}(b) = b - int_a^b sigma_d``."""
    return b - (d.sigma_primitive(b) - d.sigma_primitive(a))


def dilate_inverse(d: DensityField, a, y, guess=None):
    """Solve ``D_{d,a}(x) = y``; the derivative is ``1 + sigma_d``."""
    pa = d.sigma_primitive(a)
    return solve_increasing(lambda x: x + (d.sigma_primitive(x) - pa),
                            lambda x: 1.0 + d.sigma(x), y, guess=guess)


def contract_inverse(d: DensityField, a, x, guess=None):
    """Solve ``C_{d,a}(q) = x``; needs ``sigma_d < 1``."""
    if not d.dilated:
        raise NotInvertible("contraction is invertible only for densities with sup sigma < 1")
    pa = d.sigma_primitive(a)
    return solve_increasing(lambda q: q - (d.sigma_primitive(q) - pa),
                            lambda q: 1.0 - d.sigma(q), x, guess=guess)


class _Dilated(DensityField):
    """``D_a f (y) = f(x) / (1 + sigma_f(x))`` with ``x = D_{f,a}^{-1}(y)``."""

    def __init__(self, inner, a):
        self.inner, self.a, self.nodes = inner, float(a), inner.nodes

    def preimage(self, y):
        if isinstance(self.inner, _Contracted) and self.inner.a == self.a:
            # the inverse of D_{f,a} for f = C_a g is C_{g,a}
            return contract_point(self.inner.inner, self.a, y)
        return dilate_inverse(self.inner, self.a, y)

    def values(self, q):
        x = self.preimage(np.asarray(q, dtype=np.float64).reshape(-1))
        return self.inner.values(x) / (1.0 + self.inner.sigma(x))[:, None]

    def primitive(self, q):
        return self.inner.primitive(self.preimage(np.asarray(q, dtype=np.float64).reshape(-1)))

    def values_and_primitive(self, q):
        x = self.preimage(np.asarray(q, dtype=np.float64).reshape(-1))
        vals = self.inner.values(x)
        return vals / (1.0 + vals @ self.nodes.wr)[:, None], self.inner.primitive(x)

    def values_at(self, Q):
        Q = np.asarray(Q, dtype=np.float64)
        x = self.preimage(Q.ravel())
        vals = self.inner.values(x)
        sig = vals @ self.nodes.wr
        cols = np.tile(np.arange(Q.shape[1]), Q.shape[0])
        return (vals[np.arange(len(x)), cols] / (1.0 + sig)).reshape(Q.shape)

    def primitive_at(self, Q):
        Q = np.asarray(Q, dtype=np.float64)
        x = self.preimage(Q.ravel()).reshape(Q.shape)
        return self.inner.primitive_at(x)

    def column_sup(self):
        return self.inner.column_sup()

    def sigma_bound(self):
        b = self.inner.sigma_bound()
        return b / (1.0 + b)

    @property
    def dilated(self):
        return True


class _Contracted(DensityField):
    """``C_a g (x) = g(q) / (1 - sigma_g(q))`` with ``q = C_{g,a}^{-1}(x)``."""

    def __init__(self, inner, a):
        self.inner, self.a, self.nodes = inner, float(a), inner.nodes

    def preimage(self, x):
        if isinstance(self.inner, _Dilated) and self.inner.a == self.a:
            # the inverse of C_{g,a} for g = D_a f is D_{f,a}
            return dilate_point(self.inner.inner, self.a, x)
        return contract_inverse(self.inner, self.a, x)

    def values(self, q):
        y = self.preimage(np.asarray(q, dtype=np.float64).reshape(-1))
        return self.inner.values(y) / (1.0 - self.inner.sigma(y))[:, None]

    def primitive(self, q):
        return self.inner.primitive(self.preimage(np.asarray(q, dtype=np.float64).reshape(-1)))

    def values_and_primitive(self, q):
        y = self.preimage(np.asarray(q, dtype=np.float64).reshape(-1))
        vals = self.inner.values(y)
        return vals / (1.0 - vals @ self.nodes.wr)[:, None], self.inner.primitive(y)

    def values_at(self, Q):
        Q = np.asarray(Q, dtype=np.float64)
        y = self.preimage(Q.ravel())
        vals = self.inner.values(y)
        sig = vals @ self.nodes.wr
        cols = np.tile(np.arange(Q.shape[1]), Q.shape[0])
        return (vals[np.arange(len(y)), cols] / (1.0 - sig)).reshape(Q.shape)

    def primitive_at(self, Q):
        Q = np.asarray(Q, dtype=np.float64)
        y = self.preimage(Q.ravel()).reshape(Q.shape)
        return self.inner.primitive_at(y)

    def column_sup(self):
        return self.inner.column_sup() / (1.0 - self.inner.sigma_bound())

    def sigma_bound(self):
        b = self.inner.sigma_bound()
        return b / (1.0 - b)


# ---------------------------------------------------------------------------
# operators


def _regrid_like(d: DensityField, out: DensityField, dilated=None) -> DensityField:
    if isinstance(d, GridDensity):
        return to_grid(out, d.q, dilated=dilated)
    return out


def density_shift(d: DensityField, a: float) -> DensityField:
    """``S_a d (x) = d(x - a)``."""
    if a == 0:
        return d
    return _regrid_like(d, _Shifted(d, a), dilated=d.dilated if isinstance(d, GridDensity) else None)


def density_transport(d: DensityField, t: float) -> DensityField:
    """``T_t d (x, v, r) = d(x - v t, v, r)``."""
    if t == 0:
        return d
    return _regrid_like(d, _Transported(d, t))


def density_dilate(d: DensityField, a: float = 0.0) -> DensityField:
    """Dilation operator; the output always has ``sigma < 1``."""
    return _regrid_like(d, _Dilated(d, a), dilated=True)


def guard_sigma(d: DensityField) -> None:
    bound = d.sigma_bound()
    if bound >= SIGMA_GUARD:
        raise NotInvertible(f"sup sigma = {bound:.6g} is at or above the guard {SIGMA_GUARD}")


def density_contract(d: DensityField, a: float = 0.0) -> DensityField:
    """Contraction operator, the inverse of ``density_dilate``."""
    if not d.dilated:
        raise NotInvertible("contraction needs a dilated density (sup sigma < 1)")
    guard_sigma(d)
    return _regrid_like(d, _Contracted(d, a), dilated=False)


def scale_density(d: DensityField, c: float) -> DensityField:
    return ScaledDensity(d, c)


def zero_density(nodes: NodeSet) -> GridDensity:
    q = np.linspace(-1.0, 1.0, 5)
    return GridDensity(q, np.zeros((5, len(nodes))), nodes, dilated=True)


# ---------------------------------------------------------------------------
# persistence


def write_grid_csv(path, d: GridDensity) -> None:
    """Rows ``q, v, r, value`` (q-major); the node weights go to ``<path>.nodes.csv``."""
    from ..io import write_csv

    n, k = d.table.shape
    qi = np.repeat(d.q, k)
    write_csv(path, ["q", "v", "r", "value"],
              zip(qi, np.tile(d.nodes.v, n), np.tile(d.nodes.r, n), d.table.ravel()))
    write_csv(f"{path}.nodes.csv", ["v", "r", "weight"], zip(d.nodes.v, d.nodes.r, d.nodes.w))


def read_grid_csv(path) -> GridDensity:
    from ..io import read_csv

    _, rows = read_csv(path)
    _, node_rows = read_csv(f"{path}.nodes.csv")
    nodes_arr = np.array(node_rows, dtype=np.float64)
    nodes = NodeSet(nodes_arr[:, 0], nodes_arr[:, 1], nodes_arr[:, 2])
    data = np.array(rows, dtype=np.float64)
    k = len(nodes)
    q = data[::k, 0]
    return GridDensity(q, data[:, 3].reshape(len(q), k), nodes)


def write_grid_binary(path, d: GridDensity) -> None:
    """Tensors ``q``, node ``v``, ``r``, ``w``, values and primitive."""
    from ..io import write_tensors

    write_tensors(path, [d.q, d.nodes.v, d.nodes.r, d.nodes.w, d.table, d.prim_table])


def read_grid_binary(path) -> GridDensity:
    from ..io import read_tensors

    q, v, r, w, table, prim = read_tensors(path)
    return GridDensity(q, table, NodeSet(v, r, w), primitive=prim)
