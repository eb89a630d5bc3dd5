"""Microscopic hard-rod dynamics through the ideal-gas field representation.

A particle is a triple ``(x, v, r)``: position, velocity and rod length.
The length may be negative.  Everything here is closed form: the field
``H(t, x)`` counts the signed lengths whose free lines separate the
space-time origin from ``(t, x)``, and every hard-rod quantity is an
evaluation of that field.
"""

from __future__ import annotations

import enum
import math
from typing import Iterable, Iterator, NamedTuple, Sequence

import numpy as np

from .errors import NegativeLength, PointInsideRod


class Particle(NamedTuple):
    position: float
    velocity: float
    length: float


class SpaceTimePoint(NamedTuple):
    t: float
    x: float


ORIGIN = SpaceTimePoint(0.0, 0.0)


class Segment(NamedTuple):
    """Oriented space-time segment from ``a`` to ``b``."""

    a: SpaceTimePoint
    b: SpaceTimePoint

    @property
    def speed(self) -> float:
        dt = self.b.t - self.a.t
        dx = self.b.x - self.a.x
        if dt != 0.0:
            return dx / dt
        if dx > 0:
            return math.inf
        if dx < 0:
            return -math.inf
        return math.nan


def segment(a, b) -> Segment:
    """Build a segment from two ``(t, x)`` pairs."""
    return Segment(SpaceTimePoint(float(a[0]), float(a[1])),
                   SpaceTimePoint(float(b[0]), float(b[1])))


class CrossingClass(enum.IntEnum):
    NoCross = 0
    Plus = 1
    Minus = -1


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=np.float64).reshape(-1)
    arr.setflags(write=False)
    return arr


class _ParticleArray:
    """Immutable columnar storage shared by gas and rod configurations."""

    __slots__ = ("x", "v", "r")

    def _set(self, x, v, r):
        x, v, r = _frozen(x), _frozen(v), _frozen(r)
        if not (len(x) == len(v) == len(r)):
            raise ValueError("position, velocity and length arrays differ in size")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(v)) and np.all(np.isfinite(r))):
            raise ValueError("particle components must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "r", r)

    def __setattr__(self, name, value):
        raise AttributeError("configurations are immutable")

    def __len__(self) -> int:
        return len(self.x)

    def __iter__(self) -> Iterator[Particle]:
        for i in range(len(self.x)):
            yield Particle(float(self.x[i]), float(self.v[i]), float(self.r[i]))

    def __getitem__(self, i: int) -> Particle:
        return Particle(float(self.x[i]), float(self.v[i]), float(self.r[i]))

    def __eq__(self, other) -> bool:
        return (type(self) is type(other)
                and np.array_equal(self.x, other.x)
                and np.array_equal(self.v, other.v)
                and np.array_equal(self.r, other.r))

    def __hash__(self):
        return hash((type(self), self.x.tobytes(), self.v.tobytes(), self.r.tobytes()))

    def __repr__(self) -> str:
        body = ", ".join(f"({p.position!r}, {p.velocity!r}, {p.length!r})" for p in self)
        return f"{type(self).__name__}([{body}])"

    @property
    def nonnegative(self) -> bool:
        return bool(np.all(self.r >= 0))

    def as_array(self) -> np.ndarray:
        """Return an ``(n, 3)`` copy with columns position, velocity, length."""
        return np.column_stack([self.x, self.v, self.r])


class GasConfig(_ParticleArray):
    """Ideal-gas configuration, sorted by position then velocity then length."""

    __slots__ = ()

    def __init__(self, x=(), v=(), r=(), *, presorted: bool = False):
        x = np.asarray(x, dtype=np.float64).reshape(-1)
        v = np.asarray(v, dtype=np.float64).reshape(-1)
        r = np.asarray(r, dtype=np.float64).reshape(-1)
        if not presorted and len(x) > 1:
            order = np.lexsort((r, v, x))
            x, v, r = x[order], v[order], r[order]
        self._set(x, v, r)

    @classmethod
    def from_particles(cls, particles: Iterable[Sequence[float]]) -> "GasConfig":
        rows = np.array([tuple(p) for p in particles], dtype=np.float64).reshape(-1, 3)
        return cls(rows[:, 0], rows[:, 1], rows[:, 2])

    def subset(self, mask) -> "GasConfig":
        mask = np.asarray(mask)
        return GasConfig(self.x[mask], self.v[mask], self.r[mask], presorted=True)


class RodConfig(_ParticleArray):
    """Hard-rod configuration.

    Rods are stored in chain order, meaning ``y[i] + r[i] <= y[i+1]``.  With
    nonnegative lengths this is ascending position order.  With negative
    lengths positions may decrease along the chain, so the order is kept as
    given and is part of the data.
    """

    __slots__ = ()

    def __init__(self, y=(), v=(), r=(), *, sort: bool = True, validate: bool = True):
        y = np.asarray(y, dtype=np.float64).reshape(-1)
        v = np.asarray(v, dtype=np.float64).reshape(-1)
        r = np.asarray(r, dtype=np.float64).reshape(-1)
        if sort and len(y) > 1:
            # zero-length rods sharing a left end go first so that contact is legal
            order = np.lexsort((v, r, y))
            y, v, r = y[order], v[order], r[order]
        self._set(y, v, r)
        if validate and len(y) > 1:
            gap = self.x[1:] - (self.x[:-1] + self.r[:-1])
            scale = max(1.0, float(np.max(np.abs(self.x))), float(np.max(np.abs(self.r))))
            if np.any(gap < -1e-12 * scale):
                i = int(np.argmin(gap))
                raise ValueError(f"rods {i} and {i + 1} overlap")

    @property
    def y(self) -> np.ndarray:
        return self.x

    @classmethod
    def from_particles(cls, particles: Iterable[Sequence[float]], *, sort: bool = True) -> "RodConfig":
        rows = np.array([tuple(p) for p in particles], dtype=np.float64).reshape(-1, 3)
        return cls(rows[:, 0], rows[:, 1], rows[:, 2], sort=sort)

    def admits_base_point(self, a: float, strict: bool = False) -> bool:
        """True when ``a`` lies in no open rod interval ``(y, y + r)``.

        Contraction from ``a`` only needs that.  Dilation from ``a`` never
        produces a rod of positive length ending exactly at ``a``, so with
        ``strict`` such rods are rejected too; then contracting and dilating
        back from ``a`` returns the configuration.
        """
        end = self.x + self.r
        inside = (self.x < a) & (a < end)
        if strict:
            inside |= (self.r > 0) & (end == a)
        return not bool(np.any(inside))

    def shifted(self, s: float) -> "RodConfig":
        return RodConfig(self.x + s, self.v, self.r, sort=False, validate=False)


# ---------------------------------------------------------------------------
# field and flows


def field_terms(c: _ParticleArray, t: float, x: float) -> np.ndarray:
    """Per-particle contributions to ``H(t, x)``."""
    p = c.x + c.v * t
    right = c.x >= 0
    return np.where(right & (p < x), c.r, 0.0) - np.where(~right & (p >= x), c.r, 0.0)


def field_H(c: _ParticleArray, t: float, x: float) -> float:
    """Signed length of lines separating the origin from ``(t, x)``.

    A particle with ``z >= 0`` counts ``+r`` when ``z + w t < x``; one with
    ``z < 0`` counts ``-r`` when ``z + w t >= x``.  Summed exactly rounded.
    """
    if len(c) == 0:
        return 0.0
    return math.fsum(field_terms(c, t, x))


class _FieldTable:
    """Sorted prefix sums for evaluating ``H(t, .)`` at many points at once."""

    def __init__(self, c: _ParticleArray, t: float):
        p = c.x + c.v * t
        right = c.x >= 0
        self.p_right = p[right]
        self.p_left = p[~right]
        oa = np.argsort(self.p_right, kind="stable")
        ob = np.argsort(self.p_left, kind="stable")
        self.p_right = self.p_right[oa]
        self.p_left = self.p_left[ob]
        ld = np.longdouble
        self.cum_right = np.concatenate([[ld(0)], np.cumsum(c.r[right][oa].astype(ld))])
        self.cum_left = np.concatenate([[ld(0)], np.cumsum(c.r[~right][ob].astype(ld))])

    def __call__(self, xs) -> np.ndarray:
        xs = np.asarray(xs, dtype=np.float64)
        ia = np.searchsorted(self.p_right, xs, side="left")
        ib = np.searchsorted(self.p_left, xs, side="left")
        total_left = self.cum_left[-1]
        val = self.cum_right[ia] - (total_left - self.cum_left[ib])
        return val.astype(np.float64)

    def at_sorted_particles(self, right) -> np.ndarray:
        """Field at the particles themselves, ties broken by their order.

        For a position-sorted config at ``t = 0``, coincident particles are
        treated as if each sat just left of the next, so they dilate into
        touching rods instead of a pile.  Without ties this equals ``self(x)``.
        """
        out = np.empty(len(right), dtype=np.longdouble)
        out[right] = self.cum_right[:-1]
        out[~right] = -(self.cum_left[-1] - self.cum_left[:-1])
        return out.astype(np.float64)


def field_H_many(c: _ParticleArray, t: float, xs) -> np.ndarray:
    """Vectorized ``field_H`` at many points, O((n + m) log n)."""
    xs = np.asarray(xs, dtype=np.float64)
    if len(c) == 0:
        return np.zeros_like(xs)
    return _FieldTable(c, t)(xs)


def crossing_signs(c: _ParticleArray, s: Segment) -> np.ndarray:
    """Crossing class of every particle's line against ``s`` as +1, -1 or 0.

    The class is read off the field convention: a line is on the lower side
    of a point ``(t, x)`` when ``z + w t >= x``.  Plus means the line leaves
    that side between ``a`` and ``b``, Minus means it enters it.  For segments
    running forward in time this is the speed rule (Plus when slower than the
    segment, Minus when faster); for backward segments the roles swap.
    """
    side_a = c.x + c.v * s.a.t >= s.a.x
    side_b = c.x + c.v * s.b.t >= s.b.x
    return side_a.astype(np.int8) - side_b.astype(np.int8)


def crossing_class(p: Particle, s: Segment) -> CrossingClass:
    z, w, _ = p
    side_a = z + w * s.a.t >= s.a.x
    side_b = z + w * s.b.t >= s.b.x
    return CrossingClass(int(side_a) - int(side_b))


def mass_flow(c: _ParticleArray, x: float, v: float, t: float) -> float:
    """Net signed length crossing the observer ``s -> x + v s`` on ``[0, t]``."""
    return field_H(c, t, x + v * t) - field_H(c, 0.0, x)


def mass_flow_crossings(c: _ParticleArray, x: float, v: float, t: float) -> float:
    """Same flow computed by classifying each line against the observer segment."""
    if len(c) == 0:
        return 0.0
    sg = crossing_signs(c, segment((0.0, x), (t, x + v * t)))
    return math.fsum(c.r * sg)


def signed_mass(c: _ParticleArray, a: float, b: float) -> float:
    """Length between ``a`` (included) and ``b`` (excluded), signed by orientation."""
    if a < b:
        return math.fsum(c.r[(a <= c.x) & (c.x < b)])
    if a > b:
        return -math.fsum(c.r[(b <= c.x) & (c.x < a)])
    return 0.0


# ---------------------------------------------------------------------------
# dilation, contraction and evolution


def dilate_point(c: _ParticleArray, a: float, x: float) -> float:
    """``D_a(x) = x + H(0, x) - H(0, a)`` for an arbitrary point ``x``."""
    return x + (field_H(c, 0.0, x) - field_H(c, 0.0, a))


def dilate(c: GasConfig, a: float = 0.0) -> RodConfig:
    """Insert every rod length between the base point ``a`` and each particle."""
    if len(c) == 0:
        return RodConfig()
    table = _FieldTable(c, 0.0)
    y = c.x + (table.at_sorted_particles(c.x >= 0) - table(np.array([a]))[0])
    return RodConfig(y, c.v, c.r, sort=False, validate=False)


def contract(y: RodConfig, a: float = 0.0) -> GasConfig:
    """Remove the rod lengths between ``a`` and each rod: the inverse of ``dilate``."""
    n = len(y)
    if n == 0:
        return GasConfig()
    if y.nonnegative:
        if not y.admits_base_point(a):
            raise PointInsideRod(f"base point {a!r} lies inside a rod")
        table = _FieldTable(y, 0.0)
        x = y.x - (table(y.x) - table(np.array([a]))[0])
        return GasConfig(x, y.v, y.r)
    # mixed signs: split the chain where y[s-1] + r[s-1] <= a <= y[s]
    left_ok = np.concatenate([[True], y.x[:-1] + y.r[:-1] <= a])
    right_ok = np.concatenate([a <= y.x, [True]])
    valid = np.flatnonzero(left_ok & right_ok)
    if len(valid) == 0:
        raise PointInsideRod(f"base point {a!r} does not split the rod chain")
    s = int(valid[0])
    cs = np.concatenate([[0.0], np.cumsum(y.r)])
    x = y.x - (cs[:-1] - cs[s])
    return GasConfig(x, y.v, y.r)


def free_evolve(c: GasConfig, t: float) -> GasConfig:
    """Ballistic motion of the ideal gas."""
    return GasConfig(c.x + c.v * t, c.v, c.r)


def quasiparticle_position(c: GasConfig, i: int, t: float) -> float:
    """Position at time ``t`` of the quasiparticle attached to particle ``i``."""
    if not -len(c) <= i < len(c):
        raise IndexError(f"particle index {i} out of range for {len(c)} particles")
    x, v, _ = c[i]
    p = x + v * t
    return p + field_H(c, t, p)


def quasiparticle_positions(c: GasConfig, t: float) -> np.ndarray:
    """All quasiparticle positions at time ``t``, indexed like ``c``."""
    if len(c) == 0:
        return np.zeros(0)
    p = c.x + c.v * t
    return p + _FieldTable(c, t)(p)


def quasiparticle_position_via_flow(c: GasConfig, i: int, t: float) -> float:
    """Same position written as dilated start plus free motion plus mass flow."""
    if not -len(c) <= i < len(c):
        raise IndexError(f"particle index {i} out of range for {len(c)} particles")
    x, v, _ = c[i]
    return dilate_point(c, 0.0, x) + v * t + mass_flow(c, x, v, t)


def quasiparticle_point(c: _ParticleArray, x, v, t: float):
    """Position map ``y_{v,t}(x)`` for test quasiparticles with arbitrary ``(x, v)``."""
    p = np.asarray(x, dtype=np.float64) + np.asarray(v, dtype=np.float64) * t
    if np.ndim(p) == 0:
        return float(p) + field_H(c, t, float(p))
    return p + field_H_many(c, t, p)


def hardrod_evolve(c: GasConfig, t: float) -> RodConfig:
    """Hard-rod configuration at time ``t`` evolved from ``dilate(c, 0)``.

    The result is in chain order, i.e. ordered by ideal-gas position at time
    ``t``.  At an exact collision instant the two colliding labels sit at the
    same point, so that configuration is not validated for overlap.
    """
    if len(c) == 0:
        return RodConfig()
    p = c.x + c.v * t
    y = p + _FieldTable(c, t)(p)
    order = np.lexsort((c.r, c.v, p))
    return RodConfig(y[order], c.v[order], c.r[order], sort=False, validate=False)


def tracer(c: GasConfig, t: float) -> float:
    """Position of a zero-length, zero-speed quasiparticle started at the origin."""
    return field_H(c, t, 0.0)


def default_base_point(y: RodConfig) -> float:
    """The origin when it is a strict base point of ``y``, else the left end of the chain."""
    if len(y) == 0 or y.admits_base_point(0.0, strict=True):
        return 0.0
    return float(y.x[0])


def _check_base(y: RodConfig, a: float) -> None:
    if not y.admits_base_point(a, strict=True):
        raise PointInsideRod(f"base point {a!r} lies inside a rod or at the right end of one")


def rod_evolve(y: RodConfig, t: float, a: float | None = None) -> RodConfig:
    """Evolve a nonnegative-length rod configuration directly.

    The gas representation is rebuilt by contracting at ``a`` (any point
    outside the rods); the dilation from the origin then differs from ``y``
    by the constant ``H(0, a)``, which is removed again after evolving.
    """
    if not y.nonnegative:
        raise NegativeLength("rod evolution is defined only through the gas for negative lengths")
    if len(y) == 0:
        return RodConfig()
    if a is None:
        a = default_base_point(y)
    _check_base(y, a)
    gas = contract(y, a)
    offset = field_H(gas, 0.0, a)
    return hardrod_evolve(gas, t).shifted(-offset)


def rod_evolve_by_shift(y: RodConfig, t: float) -> RodConfig:
    """``U_t Y = S_{o_t} D_0 T_t C_0 Y`` for ``Y`` with no rod covering the origin."""
    _check_base(y, 0.0)
    gas = contract(y, 0.0)
    o_t = tracer(gas, t)
    moved = dilate(free_evolve(gas, t), 0.0)
    return moved.shifted(o_t)


def rod_positions(y: RodConfig, t: float, a: float | None = None) -> np.ndarray:
    """Closed-form position at time ``t`` of every rod, indexed like ``y``.

    The gas coordinates are computed in place (no re-sorting), so index ``i``
    follows the quasiparticle that starts as rod ``i``.
    """
    if not y.nonnegative:
        raise NegativeLength("rod positions need nonnegative lengths")
    if len(y) == 0:
        return np.zeros(0)
    if a is None:
        a = default_base_point(y)
    _check_base(y, a)
    table = _FieldTable(y, 0.0)
    x = y.x - (table(y.x) - table(np.array([a]))[0])
    gas = GasConfig(x, y.v, y.r, presorted=True)
    p = gas.x + gas.v * t
    return p + _FieldTable(gas, t)(p) - field_H(gas, 0.0, a)
