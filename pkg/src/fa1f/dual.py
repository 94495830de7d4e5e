"""Dual paths, activation, codings, skeletons and Vitali selection.

A tau-dual path of ``(x, t)`` runs backwards in time from ``t`` down to
``tau``.  Dual time ``s`` corresponds to real time ``t - s``.  At each
decision time of its current site inside ``(tau, t - s_k)`` it may jump to
a neighbor.  The path is activated when it meets a space-time point where
both coupled marginals are occupied.
"""

from __future__ import annotations

import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from itertools import product
from typing import Iterator


from .dynamics import CoupledTrajectory, is_t_activated
from .harris import HarrisScheme, times_between


class DualError(ValueError):
    pass


class InconsistencyError(RuntimeError):
    """The constructive recursion met a case the argument rules out."""


def decision_time(scheme: HarrisScheme, site: int, r: float, tol: float = 1e-9) -> float | None:
    """Decision time of ``site`` within ``tol`` of ``r`` (undoes ``t - (t - r)`` rounding)."""
    times = scheme.times[site]
    k = bisect_left(times, r - tol)
    if k < len(times) and abs(times[k] - r) <= tol:
        return float(times[k])
    return None


@dataclass(frozen=True)
class DualPath:
    """Reversed-time path anchored at ``(x, t)`` with cutoff ``tau``.

    ``jumps`` lists ``(s_k, x_k)``: at dual time ``s_k`` the path moves to
    ``x_k``.  Dual times strictly increase and stay below ``t - tau``.
    """

    x: int
    t: float
    tau: float
    jumps: tuple[tuple[float, int], ...] = ()

    @property
    def n_jumps(self) -> int:
        return len(self.jumps)

    @property
    def sites(self) -> tuple[int, ...]:
        return (self.x,) + tuple(site for _, site in self.jumps)

    def site_at(self, s: float) -> int:
        """Position at dual time ``s`` (right-continuous)."""
        k = bisect_right([sk for sk, _ in self.jumps], s)
        return self.sites[k]

    def segments(self) -> list[tuple[int, float, float]]:
        """``(site, real_lo, real_hi)`` per constant piece, latest first.

        Piece ``k`` occupies real times ``(real_lo, real_hi]`` except that the
        first piece excludes ``t`` and the last one includes ``tau``.
        """
        sites = self.sites
        reals = [self.t] + [self.t - s for s, _ in self.jumps] + [self.tau]
        return [(sites[k], reals[k + 1], reals[k]) for k in range(len(sites))]

    def validate(self, scheme: HarrisScheme) -> None:
        g = scheme.graph
        prev_site, prev_s = self.x, 0.0
        if not 0 <= self.tau < self.t:
            raise DualError("need 0 <= tau < t")
        for s, site in self.jumps:
            r = self.t - s
            if not (prev_s < s < self.t - self.tau):
                raise DualError(f"jump time {s} out of order or outside the window")
            if not g.is_adjacent(prev_site, site):
                raise DualError(f"jump {prev_site}->{site} is not along an edge")
            if decision_time(scheme, prev_site, r) is None:
                raise DualError(f"real time {r} is not a decision time of {prev_site}")
            prev_site, prev_s = site, s


@dataclass
class DualPathEnumeration:
    paths: list[DualPath]
    truncated: bool

    def __len__(self) -> int:
        return len(self.paths)


def _check_window(s: HarrisScheme, t: float, tau: float) -> None:
    if not 0 <= tau < t:
        raise DualError(f"need 0 <= tau < t, got tau={tau}, t={t}")
    if t > s.horizon:
        raise DualError("t beyond the scheme horizon")


def iter_dual_paths(s: HarrisScheme, x: int, t: float, tau: float) -> Iterator[DualPath]:
    """Depth-first generator over every tau-dual path of ``(x, t)``."""
    _check_window(s, t, tau)
    adj = s.graph.adjacency

    def rec(site: int, upper: float, jumps: tuple) -> Iterator[DualPath]:
        yield DualPath(x, t, tau, jumps)
        for r in times_between(s, site, tau, upper).tolist()[::-1]:
            for y in adj[site]:
                yield from rec(y, r, jumps + ((t - r, y),))

    yield from rec(x, t, ())


def enumerate_dual_paths(s: HarrisScheme, x: int, t: float, tau: float, cap: int = 100_000) -> DualPathEnumeration:
    """All tau-dual paths of ``(x, t)``, or the first ``cap`` with a truncation flag."""
    paths = []
    for p in iter_dual_paths(s, x, t, tau):
        if len(paths) == cap:
            return DualPathEnumeration(paths, True)
        paths.append(p)
    return DualPathEnumeration(paths, False)


def count_dual_paths(s: HarrisScheme, x: int, t: float, tau: float) -> int:
    """Exact number of tau-dual paths, by recursion on (site, upper time)."""
    _check_window(s, t, tau)
    adj = s.graph.adjacency
    memo: dict[tuple[int, float], int] = {}

    def rec(site: int, upper: float) -> int:
        key = (site, upper)
        if key not in memo:
            total = 1
            for r in times_between(s, site, tau, upper).tolist():
                total += sum(rec(y, r) for y in adj[site])
            memo[key] = total
        return memo[key]

    return rec(x, t)


# ------------------------------------------------------------ activation


def both_occupied_on(ct: CoupledTrajectory, site: int, lo: float, hi: float,
                     hi_closed: bool = True) -> bool:
    """Whether both marginals equal one at ``site`` somewhere in ``[lo, hi]``.

    Spins are right-continuous, so the value at ``lo`` is also the value just
    after it; open and closed left ends therefore give the same answer.
    """
    a_t, _ = ct.eta.site_changes(site)
    b_t, _ = ct.eta_tilde.site_changes(site)
    points = [lo]
    for changes in (a_t, b_t):
        points.extend(changes[bisect_right(changes, lo):bisect_left(changes, hi)])
    if hi_closed:
        points.append(hi)
    return any(ct.eta.value_at(site, r) == 1 and ct.eta_tilde.value_at(site, r) == 1 for r in points)


def is_activated_path(ct: CoupledTrajectory, p: DualPath) -> bool:
    return any(both_occupied_on(ct, site, lo, hi, hi_closed=k > 0) for k, (site, lo, hi) in enumerate(p.segments()))


@dataclass(frozen=True)
class ActivationAudit:
    all_paths_activated: bool
    t_activated: bool
    truncated: bool
    nodes: int

    @property
    def violation(self) -> bool:
        return self.all_paths_activated and not self.truncated and not self.t_activated


def audit_activation(ct: CoupledTrajectory, x: int, t: float, tau: float, cap: int = 1_000_000) -> ActivationAudit:
    """Check that "every dual path activated" implies ``x`` is t-activated.

    Searches for a non-activated dual path.  A path whose fixed pieces
    already meet a doubly occupied point is activated with all of its
    extensions, so such branches are pruned; ``cap`` bounds the number of
    search nodes.
    """
    s = ct.scheme
    _check_window(s, t, tau)
    adj = s.graph.adjacency
    nodes = 0
    truncated = False

    def search(site: int, upper: float, first: bool) -> bool:
        """True when some completion from (site, upper) is not activated."""
        nonlocal nodes, truncated
        nodes += 1
        if nodes > cap:
            truncated = True
            return False
        if not both_occupied_on(ct, site, tau, upper, hi_closed=not first):
            return True
        for r in times_between(s, site, tau, upper).tolist()[::-1]:
            # the piece (r, upper] only grows as r decreases
            if both_occupied_on(ct, site, r, upper, hi_closed=not first):
                break
            for y in adj[site]:
                if search(y, r, False):
                    return True
        return False

    found = search(x, t, True)
    activated = is_t_activated(ct, x, t)
    result = ActivationAudit(not found and not truncated, activated, truncated, nodes)
    if result.violation:
        raise InconsistencyError(f"every dual path of ({x}, {t}) is activated but x is not t-activated")
    return result


def _disagree_on(ct: CoupledTrajectory, site: int, lo: float, hi: float) -> bool:
    """Whether the marginals differ at ``site`` throughout the open interval."""
    a_t, _ = ct.eta.site_changes(site)
    b_t, _ = ct.eta_tilde.site_changes(site)
    points = [lo]
    for changes in (a_t, b_t):
        points.extend(changes[bisect_right(changes, lo):bisect_left(changes, hi)])
    return all(ct.eta.value_at(site, r) != ct.eta_tilde.value_at(site, r) for r in points)


def find_non_activated_path(ct: CoupledTrajectory, x: int, t: float, tau: float) -> DualPath | None:
    """Build a non-activated dual path when ``x`` is not t-activated.

    Follows the disagreement backwards: from site ``x_k`` with upper time
    ``t_k``, the latest decision time at which the marginals switched from
    agreeing to disagreeing is where one marginal was facilitated and the
    other was not; the path jumps there to the lowest-id neighbor on which
    the marginals differ.  Returns ``None`` when ``x`` is t-activated.
    """
    s = ct.scheme
    _check_window(s, t, tau)
    if is_t_activated(ct, x, t):
        return None
    eta, eta_t = ct.eta, ct.eta_tilde
    site, upper = x, t
    jumps: list[tuple[float, int]] = []
    while True:
        if _disagree_on(ct, site, tau, upper):
            return DualPath(x, t, tau, tuple(jumps))
        switch = None
        for r in times_between(s, site, tau, upper).tolist()[::-1]:
            if eta.value_before(site, r) == eta_t.value_before(site, r):
                switch = r
                break
        if switch is None:
            raise InconsistencyError(f"agreement at site {site} below {upper} without a switching decision time")
        nxt = [y for y in s.graph.adjacency[site] if eta.value_before(y, switch) != eta_t.value_before(y, switch)]
        if not nxt:
            raise InconsistencyError(f"no disagreeing neighbor of {site} at {switch}")
        site, upper = nxt[0], switch
        jumps.append((t - switch, site))


# --------------------------------------------------------------- codings


@dataclass(frozen=True)
class BasicCoding:
    """Site after each decision point met along the path, in dual order.

    ``sites[0]`` is the anchor; ``dual_times[i]`` is the dual time of the
    ``i``-th decision point (``dual_times[0] = 0``).  Stays after the last
    jump are not listed, so the constant path codes as ``(x,)``.
    """

    sites: tuple[int, ...]
    dual_times: tuple[float, ...]

    @property
    def value(self) -> int:
        return len(self.sites) - 1


def code_path(p: DualPath, s: HarrisScheme) -> BasicCoding:
    sites = [p.x]
    times = [0.0]
    current, upper = p.x, p.t
    for s_k, nxt in p.jumps:
        r = decision_time(s, current, p.t - s_k)
        if r is None:
            raise DualError(f"jump at dual time {s_k} is not a decision time of {current}")
        for stay in times_between(s, current, r, upper).tolist()[::-1]:
            sites.append(current)
            times.append(p.t - stay)
        sites.append(nxt)
        times.append(s_k)
        current, upper = nxt, r
    return BasicCoding(tuple(sites), tuple(times))


def decode_coding(c: BasicCoding, s: HarrisScheme, t: float, tau: float) -> DualPath:
    """Inverse of :func:`code_path` on the same scheme."""
    g = s.graph
    current, upper = c.sites[0], t
    jumps = []
    for nxt in c.sites[1:]:
        pts = times_between(s, current, tau, upper)
        if pts.size == 0:
            raise DualError("coding asks for a decision point that does not exist")
        r = float(pts[-1])
        if nxt != current:
            if not g.is_adjacent(current, nxt):
                raise DualError(f"coding step {current}->{nxt} is not along an edge")
            jumps.append((t - r, nxt))
        current, upper = nxt, r
    return DualPath(c.sites[0], t, tau, tuple(jumps))


@dataclass(frozen=True)
class Skeleton:
    counts: tuple[int, ...]

    @property
    def total(self) -> int:
        return sum(self.counts)


def skeleton_levels(K: float, t: float) -> int:
    return math.ceil(t / (2 * K))


def skeleton_of(c: BasicCoding, K: float, t: float) -> Skeleton:
    """Coding entries per dual level of length ``K/2``.

    Entry ``i`` counts in the level containing its dual time; a time on a
    level boundary goes to the earlier level, so the site straddling a
    boundary is counted once.
    """
    if not K < t:
        raise DualError("need K < t")
    levels = skeleton_levels(K, t)
    counts = [0] * levels
    for u in c.dual_times:
        lvl = max(1, math.ceil(u / (K / 2)))
        if lvl <= levels:
            counts[lvl - 1] += 1
    return Skeleton(tuple(counts))


def count_skeletons(L: int, levels: int) -> int:
    """Number of skeletons with ``levels`` entries summing to at most ``L``."""
    if L < 0 or levels < 1:
        raise DualError("need L >= 0 and levels >= 1")
    return math.comb(L + levels, levels)


def count_skeletons_brute(L: int, levels: int) -> int:
    return sum(1 for v in product(range(L + 1), repeat=levels) if sum(v) <= L)


@dataclass(frozen=True)
class PathCensus:
    n_paths: int
    max_value: int
    exceeding: int
    threshold: float
    truncated: bool


def long_path_census(s: HarrisScheme, x: int, t: float, tau: float, N: float, cap: int = 100_000) -> PathCensus:
    """Largest coding value and the number of paths with value above ``N (t - tau)``."""
    en = enumerate_dual_paths(s, x, t, tau, cap)
    values = [code_path(p, s).value for p in en.paths]
    thr = N * (t - tau)
    return PathCensus(len(values), max(values), sum(v > thr for v in values), thr, en.truncated)


# ---------------------------------------------------------------- Vitali


@dataclass(frozen=True)
class VitaliEntry:
    level: int
    site: int
    lifetime: int

    @property
    def interval(self) -> tuple[int, int]:
        return self.level, self.level + self.lifetime


@dataclass(frozen=True)
class VitaliCoding:
    entries: tuple[VitaliEntry, ...] = field(default_factory=tuple)

    @property
    def covered(self) -> int:
        return sum(e.lifetime for e in self.entries)


def vitali_select(candidates):
    """Greedy longest-first choice of pairwise disjoint closed intervals.

    ``candidates`` are ``(level, lifetime)`` pairs (or objects with those
    attributes) describing ``[level, level + lifetime]``.  Ties go to the
    lower level.  The selection covers at least a third of the union.
    """
    items = []
    for c in candidates:
        lvl, life = (c.level, c.lifetime) if hasattr(c, "level") else c
        items.append((lvl, life, c))
    chosen = []
    for lvl, life, c in sorted(items, key=lambda it: (-it[1], it[0])):
        if all(lvl > b or lvl + life < a for a, b in ((cl, cl + cf) for cl, cf, _ in chosen)):
            chosen.append((lvl, life, c))
    chosen.sort(key=lambda it: it[0])
    return [c for _, _, c in chosen]


def union_length(intervals) -> float:
    segs = sorted((a, a + l) for a, l in intervals)
    total, cur_a, cur_b = 0.0, None, None
    for a, b in segs:
        if cur_b is None or a > cur_b:
            if cur_b is not None:
                total += cur_b - cur_a
            cur_a, cur_b = a, b
        else:
            cur_b = max(cur_b, b)
    if cur_b is not None:
        total += cur_b - cur_a
    return total
