"""Harris graphical construction: per-site Poisson decision times with marks.

Every site owns a rate-one Poisson process on ``(0, T]``; each point carries
an independent Bernoulli(q) mark ``gamma``.  Points with ``gamma = 1`` are
type-1 decision times, the others type-0.  Each site draws from its own
counter-based stream keyed by ``(seed, site)``, so a scheme does not depend
on the order in which sites are sampled.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

from .graph import GraphView

SEED_LIMIT = 2**64

TYPE_FILTERS = ("any", "type0", "type1")


class SchemeError(ValueError):
    pass


def check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed < SEED_LIMIT:
        raise SchemeError(f"seed {seed} is not an unsigned 64-bit integer")
    return seed


def site_stream(seed: int, site: int, tag: int = 0) -> np.random.Generator:
    """Philox stream keyed by ``(seed, site, tag)``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([check_seed(seed), site, tag])))


@dataclass(frozen=True)
class DecisionMark:
    time: float
    gamma: int


@dataclass(frozen=True, eq=False)
class HarrisScheme:
    """Decision times and marks for every site of a window.

    ``times[x]`` is strictly increasing in ``(0, horizon]`` and
    ``gammas[x]`` holds the matching 0/1 marks.
    """

    graph: GraphView
    horizon: float
    q: float
    seed: int | None
    times: tuple[np.ndarray, ...]
    gammas: tuple[np.ndarray, ...]

    def __post_init__(self):
        if not self.horizon > 0:
            raise SchemeError("horizon must be positive")
        if not 0 < self.q < 1:
            raise SchemeError("q must lie in (0, 1)")
        if len(self.times) != self.graph.n or len(self.gammas) != self.graph.n:
            raise SchemeError("one time/mark sequence per site is required")

    @property
    def n(self) -> int:
        return self.graph.n

    def marks_of(self, x: int) -> list[DecisionMark]:
        return [DecisionMark(float(t), int(g)) for t, g in zip(self.times[x], self.gammas[x])]

    def count(self) -> int:
        return int(sum(len(t) for t in self.times))

    @cached_property
    def events(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """All marks merged in global time order (ties by site id)."""
        if self.count() == 0:
            return (np.empty(0), np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int8))
        sites = np.concatenate([np.full(len(t), x, dtype=np.int64) for x, t in enumerate(self.times)])
        times = np.concatenate(self.times)
        gammas = np.concatenate(self.gammas).astype(np.int8)
        order = np.lexsort((sites, times))
        return times[order], sites[order], gammas[order]

    @cached_property
    def type_times(self) -> tuple[tuple[np.ndarray, ...], tuple[np.ndarray, ...]]:
        """Per-site type-0 and type-1 time arrays."""
        t0 = tuple(t[g == 0] for t, g in zip(self.times, self.gammas))
        t1 = tuple(t[g == 1] for t, g in zip(self.times, self.gammas))
        return t0, t1

    def dump(self) -> str:
        """One ``"site time gamma"`` line per mark, full float precision."""
        lines = []
        for x in range(self.n):
            for t, g in zip(self.times[x], self.gammas[x]):
                lines.append(f"{x} {float(t)!r} {int(g)}\n")
        return "".join(lines)

    @classmethod
    def from_marks(cls, graph: GraphView, horizon: float, q: float,
                   marks: Mapping[int, Sequence[tuple[float, int]]], seed: int | None = None) -> "HarrisScheme":
        """Build a scheme from explicit ``site -> [(time, gamma), ...]`` lists."""
        times, gammas = [], []
        for x in range(graph.n):
            pts = sorted(marks.get(x, ()))
            t = np.array([p[0] for p in pts], dtype=float)
            g = np.array([p[1] for p in pts], dtype=np.int8)
            if t.size and (t[0] <= 0 or t[-1] > horizon or np.any(np.diff(t) <= 0)):
                raise SchemeError(f"marks of site {x} must be strictly increasing in (0, horizon]")
            if np.any((g != 0) & (g != 1)):
                raise SchemeError("marks must be 0 or 1")
            times.append(t)
            gammas.append(g)
        return cls(graph, float(horizon), float(q), seed, tuple(times), tuple(gammas))

    @classmethod
    def parse(cls, graph: GraphView, horizon: float, q: float, text: str) -> "HarrisScheme":
        marks: dict[int, list[tuple[float, int]]] = {}
        for line in text.splitlines():
            if line.strip():
                x, t, g = line.split()
                marks.setdefault(int(x), []).append((float(t), int(g)))
        return cls.from_marks(graph, horizon, q, marks)


def sample_site(seed: int, site: int, horizon: float, q: float) -> tuple[np.ndarray, np.ndarray]:
    rng = site_stream(seed, site)
    k = rng.poisson(horizon)
    # horizon * (1 - U) lies in (0, horizon]
    t = np.sort(horizon * (1.0 - rng.random(k)))
    g = (rng.random(k) < q).astype(np.int8)
    return t, g


def sample_scheme(g: GraphView, horizon: float, q: float, seed: int) -> HarrisScheme:
    """Sample the Harris scheme of window ``g`` on ``(0, horizon]``."""
    if not horizon > 0:
        raise SchemeError("horizon must be positive")
    if not 0 < q < 1:
        raise SchemeError("q must lie in (0, 1)")
    seed = check_seed(seed)
    pairs = [sample_site(seed, x, horizon, q) for x in range(g.n)]
    return HarrisScheme(g, float(horizon), float(q), seed,
                        tuple(p[0] for p in pairs), tuple(p[1] for p in pairs))


def marks_in(s: HarrisScheme, x: int, a: float, b: float, type_filter: str = "any") -> list[DecisionMark]:
    """Marks of ``x`` with time in ``(a, b]`` matching ``type_filter``."""
    if not a < b:
        raise SchemeError(f"interval ({a}, {b}] is empty or inverted")
    if type_filter not in TYPE_FILTERS:
        raise SchemeError(f"unknown filter {type_filter!r}")
    t = s.times[x]
    lo = np.searchsorted(t, a, side="right")
    hi = np.searchsorted(t, b, side="right")
    out = []
    for time, gamma in zip(t[lo:hi], s.gammas[x][lo:hi]):
        if type_filter == "any" or (type_filter == "type1") == bool(gamma):
            out.append(DecisionMark(float(time), int(gamma)))
    return out


def times_between(s: HarrisScheme, x: int, a: float, b: float) -> np.ndarray:
    """Decision times of ``x`` strictly inside ``(a, b)``."""
    t = s.times[x]
    return t[np.searchsorted(t, a, side="right"):np.searchsorted(t, b, side="left")]
