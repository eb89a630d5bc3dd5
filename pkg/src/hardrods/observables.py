"""Test functions ``phi(y, v, r) = 1[a <= y <= b] * mark(v, r)`` for empirical measures."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class Observable:
    a: float
    b: float
    mark: Callable
    v_breaks: tuple = ()
    r_breaks: tuple = ()
    name: str = "custom"

    def __post_init__(self):
        if not self.a <= self.b:
            raise ValueError(f"observable interval [{self.a}, {self.b}] is empty")

    def __call__(self, y, v, r):
        y = np.asarray(y, dtype=np.float64)
        inside = (y >= self.a) & (y <= self.b)
        return np.where(inside, self.mark(np.asarray(v, dtype=np.float64), np.asarray(r, dtype=np.float64)), 0.0)

    def check(self, v_support, r_support, n: int = 41) -> float:
        """Largest mark value on the supports; raises if negative or not finite."""
        vv, rr = np.meshgrid(np.linspace(*v_support, n), np.linspace(*r_support, n))
        vals = np.asarray(self.mark(vv, rr), dtype=np.float64) * np.ones_like(vv)
        if not np.all(np.isfinite(vals)) or np.any(vals < 0):
            raise ValueError(f"mark of observable {self.name!r} must be finite and nonnegative")
        return float(vals.max())


def constant(a: float, b: float, c: float = 1.0) -> Observable:
    if c < 0:
        raise ValueError("constant mark must be nonnegative")
    return Observable(a, b, lambda v, r: np.full(np.broadcast(v, r).shape, float(c)), name="constant")


def polynomial(a: float, b: float, coeffs: dict) -> Observable:
    """Mark ``sum c_ij v**i r**j`` from ``{(i, j): c_ij}``."""
    items = [((int(i), int(j)), float(c)) for (i, j), c in coeffs.items()]

    def mark(v, r):
        out = np.zeros(np.broadcast(v, r).shape)
        for (i, j), c in items:
            out = out + c * v ** i * r ** j
        return out

    return Observable(a, b, mark, name="polynomial")


def box(a: float, b: float, v_lo: float, v_hi: float, r_lo: float = -np.inf,
        r_hi: float = np.inf, value: float = 1.0) -> Observable:
    def mark(v, r):
        return np.where((v >= v_lo) & (v <= v_hi) & (r >= r_lo) & (r <= r_hi), value, 0.0)

    vb = tuple(x for x in (v_lo, v_hi) if np.isfinite(x))
    rb = tuple(x for x in (r_lo, r_hi) if np.isfinite(x))
    return Observable(a, b, mark, v_breaks=vb, r_breaks=rb, name="box")


def from_spec(spec: dict) -> Observable:
    """Build an observable from a config table ``{kind, a, b, ...}``."""
    kind = spec.get("kind", "constant")
    a, b = float(spec["a"]), float(spec["b"])
    if kind == "constant":
        return constant(a, b, float(spec.get("value", 1.0)))
    if kind == "polynomial":
        terms = spec.get("terms", [[0, 0, 1.0]])
        return polynomial(a, b, {(int(t[0]), int(t[1])): float(t[2]) for t in terms})
    if kind == "box":
        return box(a, b, float(spec["v_lo"]), float(spec["v_hi"]),
                   float(spec.get("r_lo", -np.inf)), float(spec.get("r_hi", np.inf)),
                   float(spec.get("value", 1.0)))
    raise ValueError(f"unknown observable kind {kind!r}")
