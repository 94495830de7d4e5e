"""FA1f evolution driven by a Harris scheme.

At a decision time ``t`` of site ``x`` with mark ``gamma``: if some neighbor
of ``x`` is occupied just before ``t``, ``x`` takes the value ``gamma``;
otherwise nothing happens.  A coupled pair runs both marginals on one scheme.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field
from functools import cached_property
from itertools import product
from typing import Iterable, Sequence, Union

import numpy as np

from .graph import GraphView
from .harris import HarrisScheme, check_seed


class DynamicsError(ValueError):
    pass


def as_configuration(values: Iterable[int], n: int | None = None) -> np.ndarray:
    c = np.asarray(list(values) if not isinstance(values, np.ndarray) else values, dtype=np.int8)
    if c.ndim != 1 or (n is not None and c.size != n):
        raise DynamicsError("configuration has the wrong shape")
    if np.any((c != 0) & (c != 1)):
        raise DynamicsError("spins must be 0 or 1")
    if not c.any():
        raise DynamicsError("the all-zero configuration is not a valid state")
    return c


def config_string(c: np.ndarray) -> str:
    return "".join(str(int(v)) for v in c)


# ---------------------------------------------------------------- laws


@dataclass(frozen=True)
class Delta:
    """Single particle at ``site``."""

    site: int


@dataclass(frozen=True)
class BernoulliConditioned:
    """Product Bernoulli(q) conditioned on not being all zero."""

    q: float

    def __post_init__(self):
        if not 0 < self.q < 1:
            raise DynamicsError("q must lie in (0, 1)")


@dataclass(frozen=True, eq=False)
class Explicit:
    config: np.ndarray


InitialLaw = Union[Delta, BernoulliConditioned, Explicit]


def sample_bernoulli_conditioned(q: float, n: int, rng: np.random.Generator) -> np.ndarray:
    while True:
        c = (rng.random(n) < q).astype(np.int8)
        if c.any():
            return c


def sample_initial(law: InitialLaw, g: GraphView, seed: int) -> np.ndarray:
    if isinstance(law, Delta):
        c = np.zeros(g.n, dtype=np.int8)
        c[g.check_site(law.site)] = 1
        return c
    if isinstance(law, BernoulliConditioned):
        rng = np.random.default_rng([check_seed(seed), 0x1A17])
        return sample_bernoulli_conditioned(law.q, g.n, rng)
    if isinstance(law, Explicit):
        return as_configuration(law.config, g.n).copy()
    raise DynamicsError(f"unknown initial law {law!r}")


# ----------------------------------------------------------- trajectory


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Initial configuration plus the time-ordered list of actual flips."""

    initial: np.ndarray
    flip_times: np.ndarray
    flip_sites: np.ndarray
    flip_values: np.ndarray
    scheme: HarrisScheme

    @property
    def horizon(self) -> float:
        return self.scheme.horizon

    @cached_property
    def _site_history(self) -> tuple[list[list[float]], list[list[int]]]:
        times = [[] for _ in range(self.initial.size)]
        values = [[] for _ in range(self.initial.size)]
        for t, x, v in zip(self.flip_times.tolist(), self.flip_sites.tolist(), self.flip_values.tolist()):
            times[x].append(t)
            values[x].append(v)
        return times, values

    def site_changes(self, x: int) -> tuple[list[float], list[int]]:
        """Flip times of ``x`` and the value taken at each."""
        times, values = self._site_history
        return times[x], values[x]

    def value_at(self, x: int, t: float) -> int:
        """Right-continuous spin of ``x`` at time ``t``."""
        times, values = self._site_history
        k = bisect_right(times[x], t)
        return int(self.initial[x]) if k == 0 else values[x][k - 1]

    def value_before(self, x: int, t: float) -> int:
        """Left limit of the spin of ``x`` at ``t``."""
        times, values = self._site_history
        k = bisect_right(times[x], t)
        if k and times[x][k - 1] == t:
            k -= 1
        return int(self.initial[x]) if k == 0 else values[x][k - 1]

    def state_at(self, t: float) -> np.ndarray:
        if t < 0 or t > self.horizon:
            raise DynamicsError(f"time {t} outside [0, {self.horizon}]")
        return np.array([self.value_at(x, t) for x in range(self.initial.size)], dtype=np.int8)

    def final(self) -> np.ndarray:
        return self.state_at(self.horizon)

    def dump(self) -> str:
        return "".join(f"{int(x)} {float(t)!r} {int(v)}\n"
                       for t, x, v in zip(self.flip_times, self.flip_sites, self.flip_values))


def evolve(init: np.ndarray, s: HarrisScheme) -> Trajectory:
    """Process every decision mark of ``s`` in global time order."""
    eta = as_configuration(init, s.n).copy()
    adj = s.graph.adjacency
    # occupied-neighbor counts make the facilitation test O(1)
    occ = [sum(int(eta[y]) for y in adj[x]) for x in range(s.n)]
    spins = eta.tolist()
    ft, fs, fv = [], [], []
    times, sites, gammas = s.events
    for t, x, gam in zip(times.tolist(), sites.tolist(), gammas.tolist()):
        if occ[x] and spins[x] != gam:
            spins[x] = gam
            delta = 1 if gam else -1
            for y in adj[x]:
                occ[y] += delta
            ft.append(t)
            fs.append(x)
            fv.append(gam)
    return Trajectory(eta, np.array(ft, dtype=float), np.array(fs, dtype=np.int64),
                      np.array(fv, dtype=np.int8), s)


# -------------------------------------------------------------- events


@dataclass(frozen=True)
class CylinderEvent:
    """Set of admissible spin patterns on a finite base."""

    base: tuple[int, ...]
    patterns: frozenset[tuple[int, ...]] = field(default_factory=frozenset)

    def __post_init__(self):
        if not self.base:
            raise DynamicsError("cylinder base must be nonempty")
        for p in self.patterns:
            if len(p) != len(self.base):
                raise DynamicsError("pattern length differs from base size")

    @classmethod
    def occupied(cls, x: int) -> "CylinderEvent":
        return cls((x,), frozenset({(1,)}))

    @classmethod
    def pattern(cls, base: Sequence[int], values: Sequence[int]) -> "CylinderEvent":
        return cls(tuple(base), frozenset({tuple(values)}))

    def complement(self) -> "CylinderEvent":
        every = set(product((0, 1), repeat=len(self.base)))
        return CylinderEvent(self.base, frozenset(every - set(self.patterns)))


def eval_event(c: np.ndarray, e: CylinderEvent) -> bool:
    return tuple(int(c[x]) for x in e.base) in e.patterns


# ------------------------------------------------------------- coupling


@dataclass(frozen=True, eq=False)
class CoupledTrajectory:
    eta: Trajectory
    eta_tilde: Trajectory

    def __post_init__(self):
        if self.eta.scheme is not self.eta_tilde.scheme:
            raise DynamicsError("coupled marginals must share one scheme")

    @property
    def scheme(self) -> HarrisScheme:
        return self.eta.scheme


def couple(law1: InitialLaw, law2: InitialLaw, s: HarrisScheme, seed1: int, seed2: int) -> CoupledTrajectory:
    a = sample_initial(law1, s.graph, seed1)
    b = sample_initial(law2, s.graph, seed2)
    return CoupledTrajectory(evolve(a, s), evolve(b, s))


def is_t_activated(ct: CoupledTrajectory, x: int, t: float) -> bool:
    if t > ct.scheme.horizon:
        raise DynamicsError("time beyond the scheme horizon")
    return ct.eta.value_at(x, t) == ct.eta_tilde.value_at(x, t)


def transition_rate(c: np.ndarray, x: int, g: GraphView, q: float) -> float:
    """Rate of ``c -> c^x``: q for a birth, 1-q for a death, 0 if unfacilitated."""
    if not any(c[y] for y in g.adjacency[x]):
        return 0.0
    return q if c[x] == 0 else 1.0 - q


def product_weight(c: np.ndarray, q: float) -> float:
    k = int(np.sum(c))
    return q**k * (1.0 - q) ** (c.size - k)
