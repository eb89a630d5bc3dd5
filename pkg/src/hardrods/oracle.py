"""Event-driven hard-rod simulation, independent of the field representation.

Rods move ballistically.  When a faster rod touches a slower one in front of
it, the two quasiparticles exchange places: the fast one jumps forward by
the partner's length and the slow one jumps back by the fast one's length.

Each label keeps an intercept ``c`` so that its position is ``c + v t``;
an exchange only adds the partner length to ``c``, so the event time never
enters the stored state.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import RodConfig
from .errors import EventOverflow, NegativeLength

DEFAULT_EVENT_CAP = 10_000_000


@dataclass(frozen=True)
class CollisionEvent:
    time: float
    left_index: int
    right_index: int


class _Simulation:
    def __init__(self, y: RodConfig, max_events: int):
        if not y.nonnegative:
            raise NegativeLength("the event-driven simulation needs nonnegative lengths")
        n = len(y)
        self.vel = [float(v) for v in y.v]
        self.length = [float(r) for r in y.r]
        self.icpt = [float(p) for p in y.x]
        self.order = list(range(n))
        self.version = [0] * max(n - 1, 0)
        self.heap: list = []
        self.clock = 0.0
        self.events = 0
        self.max_events = max_events
        self.log: list[CollisionEvent] = []
        for i in range(n - 1):
            self._schedule(i)

    def _schedule(self, i: int) -> None:
        a, b = self.order[i], self.order[i + 1]
        dv = self.vel[a] - self.vel[b]
        if dv <= 0:
            return
        s = (self.icpt[b] - self.icpt[a] - self.length[a]) / dv
        if s < self.clock:
            s = self.clock
        heapq.heappush(self.heap, (s, i, self.version[i]))

    def advance(self, t: float, record: bool = False) -> None:
        heap, order = self.heap, self.order
        while heap and heap[0][0] <= t:
            s, i, ver = heapq.heappop(heap)
            if ver != self.version[i]:
                continue
            self.events += 1
            if self.events > self.max_events:
                raise EventOverflow(f"more than {self.max_events} collisions")
            self.clock = s
            a, b = order[i], order[i + 1]
            if record:
                self.log.append(CollisionEvent(s, i, i + 1))
            self.icpt[a] += self.length[b]
            self.icpt[b] -= self.length[a]
            order[i], order[i + 1] = b, a
            for k in (i - 1, i, i + 1):
                if 0 <= k < len(self.version):
                    self.version[k] += 1
                    self._schedule(k)
        if t > self.clock:
            self.clock = t

    def position(self, label: int, t: float) -> float:
        return self.icpt[label] + self.vel[label] * t


def oracle_evolve(y: RodConfig, t: float, max_events: int = DEFAULT_EVENT_CAP) -> RodConfig:
    """Rod configuration at time ``t >= 0``, rods listed in position order.

    Collisions at exactly time ``t`` are applied.
    """
    if t < 0:
        raise ValueError("the event-driven simulation runs forward in time only")
    sim = _Simulation(y, max_events)
    sim.advance(t)
    labels = sim.order
    pos = [sim.position(k, t) for k in labels]
    return RodConfig(pos, [sim.vel[k] for k in labels], [sim.length[k] for k in labels],
                     sort=False, validate=False)


def oracle_positions(y: RodConfig, t: float, max_events: int = DEFAULT_EVENT_CAP) -> np.ndarray:
    """Position at time ``t`` of every quasiparticle, indexed by its initial rod index."""
    if t < 0:
        raise ValueError("the event-driven simulation runs forward in time only")
    sim = _Simulation(y, max_events)
    sim.advance(t)
    return np.array([sim.position(k, t) for k in range(len(y))])


def oracle_trajectory(y: RodConfig, i: int, times: Sequence[float],
                      max_events: int = DEFAULT_EVENT_CAP) -> list[float]:
    """Positions of the quasiparticle that starts as rod ``i`` at each time."""
    if not 0 <= i < len(y):
        raise IndexError(f"rod index {i} out of range for {len(y)} rods")
    times = np.asarray(times, dtype=np.float64)
    if np.any(times < 0):
        raise ValueError("the event-driven simulation runs forward in time only")
    sim = _Simulation(y, max_events)
    out = np.empty(len(times))
    for k in np.argsort(times, kind="stable"):
        sim.advance(float(times[k]))
        out[k] = sim.position(i, float(times[k]))
    return out.tolist()


def oracle_events(y: RodConfig, t: float, max_events: int = DEFAULT_EVENT_CAP) -> list[CollisionEvent]:
    """The collisions processed up to time ``t``, in order."""
    sim = _Simulation(y, max_events)
    sim.advance(t, record=True)
    return sim.log
