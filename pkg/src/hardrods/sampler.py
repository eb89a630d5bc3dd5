"""Marked Poisson initial data and the line-measure moments of an intensity.

An intensity ``f(x, v, r)`` is a finite sum of product components
``rho(x) * p_V(v) * p_R(r)``: a spatial rate profile, a compactly supported
velocity law and a length law (atoms or a uniform density).  Sampling is done
per unit spatial cell with its own counter-based random stream, so the
points inside a cell do not depend on how large the sampling window is.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import special

from .core import GasConfig, Segment, crossing_signs
from .errors import InvalidRegion, UnboundedSupport
from .quadrature import gauss_legendre, integrate

# ---------------------------------------------------------------------------
# velocity laws


@dataclass(frozen=True)
class UniformVelocity:
    lo: float
    hi: float

    def __post_init__(self):
        _check_compact("velocity", self.lo, self.hi)

    @property
    def support(self):
        return (self.lo, self.hi)

    def pdf(self, v):
        v = np.asarray(v, dtype=np.float64)
        return np.where((v >= self.lo) & (v <= self.hi), 1.0 / (self.hi - self.lo), 0.0)

    def mean(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def sample(self, rng, n):
        return self.lo + (self.hi - self.lo) * rng.random(n)


@dataclass(frozen=True)
class TruncatedGaussianVelocity:
    """Gaussian law restricted to ``[lo, hi]``."""

    center: float
    scale: float
    lo: float
    hi: float

    def __post_init__(self):
        _check_compact("velocity", self.lo, self.hi)
        if not self.scale > 0:
            raise ValueError("velocity scale must be positive")

    @property
    def support(self):
        return (self.lo, self.hi)

    def _cdf_bounds(self):
        a = (self.lo - self.center) / self.scale
        b = (self.hi - self.center) / self.scale
        return special.ndtr(a), special.ndtr(b)

    def pdf(self, v):
        v = np.asarray(v, dtype=np.float64)
        ca, cb = self._cdf_bounds()
        z = (v - self.center) / self.scale
        dens = np.exp(-0.5 * z * z) / (math.sqrt(2 * math.pi) * self.scale * (cb - ca))
        return np.where((v >= self.lo) & (v <= self.hi), dens, 0.0)

    def mean(self) -> float:
        x, w = gauss_legendre(64)
        half = 0.5 * (self.hi - self.lo)
        v = 0.5 * (self.lo + self.hi) + half * x
        return float(half * np.sum(w * v * self.pdf(v)))

    def sample(self, rng, n):
        ca, cb = self._cdf_bounds()
        u = ca + (cb - ca) * rng.random(n)
        return np.clip(self.center + self.scale * special.ndtri(u), self.lo, self.hi)


def _check_compact(what, lo, hi):
    if not (np.isfinite(lo) and np.isfinite(hi)):
        raise UnboundedSupport(f"{what} support [{lo}, {hi}] is not compact")
    if not lo <= hi:
        raise ValueError(f"{what} support [{lo}, {hi}] is empty")


# ---------------------------------------------------------------------------
# length laws


@dataclass(frozen=True)
class AtomLengths:
    values: tuple
    probs: tuple

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        probs = tuple(float(p) for p in self.probs)
        if len(vals) != len(probs) or not vals:
            raise ValueError("length atoms and probabilities must have the same nonzero size")
        if any(p < 0 for p in probs) or not math.isclose(sum(probs), 1.0, abs_tol=1e-12):
            raise ValueError("length atom probabilities must be nonnegative and sum to 1")
        if not all(np.isfinite(vals)):
            raise UnboundedSupport("length atoms must be finite")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "probs", probs)

    @property
    def support(self):
        return (min(self.values), max(self.values))

    @property
    def nonnegative(self) -> bool:
        return all(v >= 0 for v, p in zip(self.values, self.probs) if p > 0)

    def moment(self, k: int) -> float:
        return math.fsum(p * v ** k for v, p in zip(self.values, self.probs))

    def abs_moment(self, k: int) -> float:
        return math.fsum(p * abs(v) ** k for v, p in zip(self.values, self.probs))

    def nodes(self, n: int | None = None):
        return np.array(self.values), np.array(self.probs)

    def expect(self, fn, breaks=()) -> float:
        vals = np.array(self.values)
        return float(np.sum(np.array(self.probs) * fn(vals)))

    def sample(self, rng, n):
        idx = np.searchsorted(np.cumsum(self.probs), rng.random(n), side="right")
        return np.array(self.values)[np.minimum(idx, len(self.values) - 1)]


@dataclass(frozen=True)
class UniformLengths:
    lo: float
    hi: float

    def __post_init__(self):
        _check_compact("length", self.lo, self.hi)

    @property
    def support(self):
        return (self.lo, self.hi)

    @property
    def nonnegative(self) -> bool:
        return self.lo >= 0

    def moment(self, k: int) -> float:
        if self.hi == self.lo:
            return self.lo ** k
        return (self.hi ** (k + 1) - self.lo ** (k + 1)) / ((k + 1) * (self.hi - self.lo))

    def abs_moment(self, k: int) -> float:
        if self.lo >= 0:
            return self.moment(k)
        return self.expect(lambda r: np.abs(r) ** k, breaks=(0.0,))

    def pdf(self, r):
        r = np.asarray(r, dtype=np.float64)
        return np.where((r >= self.lo) & (r <= self.hi), 1.0 / (self.hi - self.lo), 0.0)

    def nodes(self, n: int = 8):
        x, w = gauss_legendre(n)
        half = 0.5 * (self.hi - self.lo)
        return 0.5 * (self.lo + self.hi) + half * x, 0.5 * w

    def expect(self, fn, breaks=()) -> float:
        if self.hi == self.lo:
            return float(fn(np.array([self.lo]))[0])
        val = integrate(lambda r: fn(r), self.lo, self.hi, breakpoints=breaks, tol=1e-12)
        return val / (self.hi - self.lo)

    def sample(self, rng, n):
        return self.lo + (self.hi - self.lo) * rng.random(n)


# ---------------------------------------------------------------------------
# spatial profiles


@dataclass(frozen=True)
class ConstantProfile:
    """Constant rate on the window ``[x_lo, x_hi]`` (the whole line by default)."""

    rate: float
    x_lo: float = -math.inf
    x_hi: float = math.inf

    def __post_init__(self):
        if not self.rate >= 0:
            raise ValueError("spatial rate must be nonnegative")

    def density(self, x):
        x = np.asarray(x, dtype=np.float64)
        return np.where((x >= self.x_lo) & (x <= self.x_hi), self.rate, 0.0)

    def antiderivative(self, x):
        """Primitive vanishing at 0."""
        x = np.clip(np.asarray(x, dtype=np.float64), self.x_lo, self.x_hi)
        base = min(max(0.0, self.x_lo), self.x_hi)
        return self.rate * (x - base)

    def max_on(self, lo, hi) -> float:
        if hi < self.x_lo or lo > self.x_hi:
            return 0.0
        return self.rate

    def sup(self) -> float:
        return self.rate

    def breakpoints(self):
        return tuple(p for p in (self.x_lo, self.x_hi) if np.isfinite(p))


@dataclass(frozen=True)
class TanhRampProfile:
    """Smooth ramp ``base * (1 + amplitude * tanh((x - center) / width))``."""

    base: float
    amplitude: float
    center: float = 0.0
    width: float = 1.0
    x_lo: float = -math.inf
    x_hi: float = math.inf

    def __post_init__(self):
        if not (self.base >= 0 and abs(self.amplitude) < 1 and self.width > 0):
            raise ValueError("ramp needs base >= 0, |amplitude| < 1 and width > 0")

    def density(self, x):
        x = np.asarray(x, dtype=np.float64)
        val = self.base * (1.0 + self.amplitude * np.tanh((x - self.center) / self.width))
        return np.where((x >= self.x_lo) & (x <= self.x_hi), val, 0.0)

    def _raw_primitive(self, x):
        u = (x - self.center) / self.width
        # log cosh without overflow
        lc = np.abs(u) + np.log1p(np.exp(-2.0 * np.abs(u))) - math.log(2.0)
        return self.base * (x + self.amplitude * self.width * lc)

    def antiderivative(self, x):
        x = np.clip(np.asarray(x, dtype=np.float64), self.x_lo, self.x_hi)
        base = min(max(0.0, self.x_lo), self.x_hi)
        return self._raw_primitive(x) - self._raw_primitive(np.float64(base))

    def max_on(self, lo, hi) -> float:
        lo, hi = max(lo, self.x_lo), min(hi, self.x_hi)
        if lo > hi:
            return 0.0
        return float(np.max(self.density(np.array([lo, hi]))))

    def sup(self) -> float:
        return self.base * (1.0 + abs(self.amplitude))

    def breakpoints(self):
        return tuple(p for p in (self.x_lo, self.x_hi) if np.isfinite(p))


# ---------------------------------------------------------------------------
# intensity model


@dataclass(frozen=True)
class Component:
    profile: object
    velocity: object
    lengths: object


@dataclass(frozen=True)
class IntensityModel:
    """Sum of product components ``rho(x) p_V(v) p_R(r)``."""

    components: tuple
    name: str = "custom"
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))

    @property
    def velocity_support(self):
        if not self.components:
            return (0.0, 0.0)
        return (min(c.velocity.support[0] for c in self.components),
                max(c.velocity.support[1] for c in self.components))

    @property
    def v_max(self) -> float:
        lo, hi = self.velocity_support
        return max(abs(lo), abs(hi))

    @property
    def length_support(self):
        if not self.components:
            return (0.0, 0.0)
        return (min(c.lengths.support[0] for c in self.components),
                max(c.lengths.support[1] for c in self.components))

    @property
    def nonnegative_lengths(self) -> bool:
        return all(c.lengths.nonnegative for c in self.components)

    def sigma(self, x):
        """Mass ``sigma_f(x) = int r f dv dr``."""
        x = np.asarray(x, dtype=np.float64)
        out = np.zeros_like(x)
        for c in self.components:
            out = out + c.profile.density(x) * c.lengths.moment(1)
        return out

    def zeta(self, x):
        """Momentum ``zeta_f(x) = int v r f dv dr``."""
        x = np.asarray(x, dtype=np.float64)
        out = np.zeros_like(x)
        for c in self.components:
            out = out + c.profile.density(x) * c.velocity.mean() * c.lengths.moment(1)
        return out

    def sigma_primitive(self, x):
        """``int_0^x sigma_f``."""
        x = np.asarray(x, dtype=np.float64)
        out = np.zeros_like(x)
        for c in self.components:
            out = out + c.profile.antiderivative(x) * c.lengths.moment(1)
        return out

    def rate(self, x):
        """Spatial particle density ``int f dv dr``."""
        x = np.asarray(x, dtype=np.float64)
        out = np.zeros_like(x)
        for c in self.components:
            out = out + c.profile.density(x)
        return out

    def total_rate(self, lo: float, hi: float) -> float:
        return float(sum(c.profile.antiderivative(hi) - c.profile.antiderivative(lo)
                         for c in self.components))

    def density(self, x, v, r):
        """Pointwise ``f(x, v, r)``; only for continuous length laws."""
        x, v, r = (np.asarray(a, dtype=np.float64) for a in (x, v, r))
        out = np.zeros(np.broadcast(x, v, r).shape)
        for c in self.components:
            if not hasattr(c.lengths, "pdf"):
                raise TypeError("pointwise density undefined for atomic length laws")
            out = out + c.profile.density(x) * c.velocity.pdf(v) * c.lengths.pdf(r)
        return out

    def dominating_bound(self) -> float:
        """``int (v^2 + r^2 + 1) gamma`` for ``gamma = sup_x f``; finite by compactness."""
        total = 0.0
        for c in self.components:
            lo, hi = c.velocity.support
            v2 = max(lo * lo, hi * hi)
            total += c.profile.sup() * (v2 + c.lengths.abs_moment(2) + 1.0)
        return total

    def mu1(self, s: Segment, side: str = "both") -> float:
        return mu_segment(self, s, 1, side)

    def mu2(self, s: Segment, side: str = "both") -> float:
        return mu_segment(self, s, 2, side)


# ---------------------------------------------------------------------------
# line-measure moments of segments


def _velocity_breaks(c: Component, s: Segment):
    lo, hi = c.velocity.support
    out = [lo, hi]
    dt = s.b.t - s.a.t
    if dt != 0:
        out.append((s.b.x - s.a.x) / dt)
    for edge in c.profile.breakpoints():
        for pt in (s.a, s.b):
            if pt.t != 0:
                out.append((pt.x - edge) / pt.t)
    return [p for p in out if lo <= p <= hi]


def crossing_integrand(c: Component, s: Segment, v, side: str):
    """``int rho(z) dz`` over starting points whose line with speed ``v`` crosses ``s``."""
    A = s.a.x - v * s.a.t
    B = s.b.x - v * s.b.t
    diff = c.profile.antiderivative(B) - c.profile.antiderivative(A)
    if side == "plus":
        return np.maximum(diff, 0.0)
    if side == "minus":
        return np.maximum(-diff, 0.0)
    if side == "both":
        return np.abs(diff)
    if side == "signed":
        return diff
    raise ValueError(f"unknown side {side!r}")


def mu_segment(m: IntensityModel, s: Segment, moment: int, side: str = "both",
               tol: float = 1e-8) -> float:
    """Integral of ``r**moment * f`` over lines crossing ``s`` from the given side.

    Plus lines pass from the lower side of ``a`` (``z + w t_a >= x_a``) to
    the upper side of ``b``; Minus lines the other way.  ``side="signed"``
    returns Plus minus Minus.  The spatial integral is closed form, the
    velocity integral adaptive Gauss-Legendre with a break at the segment
    speed.
    """
    if moment not in (1, 2):
        raise ValueError("moment must be 1 or 2")
    if s.a == s.b:
        return 0.0
    total = 0.0
    for c in m.components:
        mk = c.lengths.moment(moment)
        if mk == 0.0:
            continue
        lo, hi = c.velocity.support
        if lo == hi:
            val = float(crossing_integrand(c, s, np.float64(lo), side))
        else:
            val = integrate(lambda v: c.velocity.pdf(v) * crossing_integrand(c, s, v, side),
                            lo, hi, breakpoints=_velocity_breaks(c, s),
                            tol=tol / max(1.0, abs(mk)) / max(1, len(m.components)))
        total += mk * val
    return total


def mu_segment_mc(m: IntensityModel, s: Segment, moment: int, side: str, n: int, rng):
    """Plain Monte Carlo estimate of ``mu_segment`` with its standard error.

    Lines are drawn uniformly over a box of starting points that contains
    every crossing line, with velocity and length drawn from their laws, and
    classified by ``core.crossing_signs``.
    """
    est, var = 0.0, 0.0
    want = {"plus": (1,), "minus": (-1,), "both": (1, -1)}[side]
    for c in m.components:
        lo, hi = c.velocity.support
        ends = [s.a.x - lo * s.a.t, s.a.x - hi * s.a.t, s.b.x - lo * s.b.t, s.b.x - hi * s.b.t]
        zlo, zhi = min(ends), max(ends)
        width = zhi - zlo
        if width == 0.0:
            continue
        z = zlo + width * rng.random(n)
        v = c.velocity.sample(rng, n)
        r = c.lengths.sample(rng, n)
        sign = crossing_signs(GasConfig(z, v, r, presorted=True), s)
        hit = np.isin(sign, want)
        vals = width * c.profile.density(z) * r ** moment * hit
        est += vals.mean()
        var += vals.var(ddof=1) / n
    return est, math.sqrt(var)


# ---------------------------------------------------------------------------
# sampling


@dataclass(frozen=True)
class SampleSpec:
    epsilon: float
    seed: int = 0
    horizon: float = 0.0
    x_lo: float = 0.0
    x_hi: float = 0.0
    pad: float = 1.0
    replica: int = 0
    cell_width: float = 1.0

    def __post_init__(self):
        if not self.epsilon > 0:
            raise InvalidRegion("epsilon must be positive")
        if not self.horizon >= 0:
            raise InvalidRegion("time horizon must be nonnegative")
        if not (np.isfinite(self.x_lo) and np.isfinite(self.x_hi) and self.x_lo <= self.x_hi):
            raise InvalidRegion(f"observation interval [{self.x_lo}, {self.x_hi}] is invalid")
        if not (self.pad >= 0 and self.cell_width > 0):
            raise InvalidRegion("pad must be nonnegative and cell width positive")
        if self.seed < 0 or self.replica < 0:
            raise InvalidRegion("seed and replica index must be nonnegative")


def sampling_window(m: IntensityModel, s: SampleSpec):
    """Window holding every line that can cross a segment in the observation region.

    Field values are taken relative to the origin, so the window always
    covers it as well as the observation interval.
    """
    lo = min(s.x_lo, 0.0) - m.v_max * s.horizon - s.pad
    hi = max(s.x_hi, 0.0) + m.v_max * s.horizon + s.pad
    return lo, hi


def _zigzag(k: int) -> int:
    return 2 * k if k >= 0 else -2 * k - 1


def stream(seed: int, *ids: int) -> np.random.Generator:
    """Counter-based generator keyed by ``seed`` and the stream identifiers."""
    key = np.random.SeedSequence([int(seed), *[int(i) for i in ids]]).generate_state(2, np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _sample_cell(m: IntensityModel, cell: int, width: float, rate_scale: float, rng):
    lo = cell * width
    hi = lo + width
    xs, vs, rs = [], [], []
    for c in m.components:
        bound = c.profile.max_on(lo, hi)
        if bound <= 0.0:
            continue
        n = rng.poisson(rate_scale * bound * width)
        x = lo + width * rng.random(n)
        keep = rng.random(n) * bound < c.profile.density(x)
        x = x[keep]
        xs.append(x)
        vs.append(c.velocity.sample(rng, len(x)))
        rs.append(c.lengths.sample(rng, len(x)))
    if not xs:
        return (np.zeros(0),) * 4
    x = np.concatenate(xs)
    return x, np.concatenate(vs), np.concatenate(rs), rng.random(len(x))


def sample_marked(m: IntensityModel, s: SampleSpec, level: int = 0):
    """Points ``(x, v, r, u)`` of the process at rate ``f / epsilon`` on the window.

    ``u`` is uniform on ``(0, 1)``; the auxiliary mark is ``z = u / epsilon``.
    """
    _check_model(m)
    lo, hi = sampling_window(m, s)
    w = s.cell_width
    first, last = int(math.floor(lo / w)), int(math.floor(hi / w))
    parts = []
    for cell in range(first, last + 1):
        rng = stream(s.seed, s.replica, level, _zigzag(cell))
        parts.append(_sample_cell(m, cell, w, 1.0 / s.epsilon, rng))
    x, v, r, u = (np.concatenate([p[k] for p in parts]) for k in range(4))
    inside = (x >= lo) & (x <= hi)
    return x[inside], v[inside], r[inside], u[inside]


def _check_model(m: IntensityModel):
    for c in m.components:
        _check_compact("velocity", *c.velocity.support)
        _check_compact("length", *c.lengths.support)


def sample(m: IntensityModel, s: SampleSpec) -> GasConfig:
    """Poisson configuration with intensity ``f / epsilon`` on the sampling window."""
    x, v, r, _ = sample_marked(m, s)
    return GasConfig(x, v, r)


def sample_nested(m: IntensityModel, eps_list: Sequence[float], s: SampleSpec) -> list[GasConfig]:
    """Set-nested configurations for a decreasing list of epsilons.

    One process is drawn at the finest level with an auxiliary mark
    ``z in (0, 1/eps_min)``; the level ``eps`` keeps the points with
    ``z < 1/eps``.
    """
    eps = [float(e) for e in eps_list]
    if any(e <= 0 for e in eps) or any(a <= b for a, b in zip(eps, eps[1:])):
        raise InvalidRegion("epsilon ladder must be positive and strictly decreasing")
    eps_min = eps[-1]
    master = SampleSpec(eps_min, s.seed, s.horizon, s.x_lo, s.x_hi, s.pad, s.replica, s.cell_width)
    x, v, r, u = sample_marked(m, master)
    z = u / eps_min
    return [GasConfig(x[z < 1.0 / e], v[z < 1.0 / e], r[z < 1.0 / e]) for e in eps]


# ---------------------------------------------------------------------------
# built-in families


def homogeneous_box(rate: float = 1.0, v: Sequence[float] = (-1.0, 1.0),
                    r: Sequence[float] = (0.0, 2.0)) -> IntensityModel:
    """Uniform velocities and lengths with a constant spatial rate.

    The defaults give ``f = 1/4`` on ``[-1, 1] x [0, 2]``, with unit mass.
    """
    comp = Component(ConstantProfile(rate), UniformVelocity(*v), UniformLengths(*r))
    return IntensityModel((comp,), "homogeneous_box", {"rate": rate, "v": list(v), "r": list(r)})


def two_atom_mix(rate: float = 1.0, v: Sequence[float] = (-1.0, 1.0),
                 lengths: Sequence[float] = (0.5, 1.5), probs: Sequence[float] = (0.5, 0.5)) -> IntensityModel:
    comp = Component(ConstantProfile(rate), UniformVelocity(*v), AtomLengths(tuple(lengths), tuple(probs)))
    return IntensityModel((comp,), "two_atom_mix",
                          {"rate": rate, "v": list(v), "lengths": list(lengths), "probs": list(probs)})


def signed_mix(rate: float = 1.0, v: Sequence[float] = (-1.0, 1.0),
               lengths: Sequence[float] = (1.0, -0.5), probs: Sequence[float] = (0.7, 0.3)) -> IntensityModel:
    """Length atoms including a negative one; the mean length stays positive."""
    law = AtomLengths(tuple(lengths), tuple(probs))
    if law.moment(1) * rate <= 0:
        raise ValueError("signed mix needs a positive mass")
    comp = Component(ConstantProfile(rate), UniformVelocity(*v), law)
    return IntensityModel((comp,), "signed_mix",
                          {"rate": rate, "v": list(v), "lengths": list(lengths), "probs": list(probs)})


def tanh_ramp(base: float = 0.5, amplitude: float = 0.3, center: float = 0.0, width: float = 2.0,
              v: Sequence[float] = (-1.0, 1.0), r: Sequence[float] = (0.5, 1.5)) -> IntensityModel:
    """Smoothly ramped spatial rate, so the mass ``sigma_f`` varies in space."""
    comp = Component(TanhRampProfile(base, amplitude, center, width), UniformVelocity(*v), UniformLengths(*r))
    return IntensityModel((comp,), "tanh_ramp",
                          {"base": base, "amplitude": amplitude, "center": center, "width": width,
                           "v": list(v), "r": list(r)})


FAMILIES = {
    "homogeneous_box": homogeneous_box,
    "two_atom_mix": two_atom_mix,
    "signed_mix": signed_mix,
    "tanh_ramp": tanh_ramp,
}


def zero_model() -> IntensityModel:
    return IntensityModel((), "zero")


def scaled(m: IntensityModel, factor: float) -> IntensityModel:
    """Multiply every spatial rate by ``factor``."""
    comps = []
    for c in m.components:
        p = c.profile
        if isinstance(p, ConstantProfile):
            p = ConstantProfile(p.rate * factor, p.x_lo, p.x_hi)
        else:
            p = TanhRampProfile(p.base * factor, p.amplitude, p.center, p.width, p.x_lo, p.x_hi)
        comps.append(Component(p, c.velocity, c.lengths))
    return IntensityModel(tuple(comps), m.name, dict(m.params))
