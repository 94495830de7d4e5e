"""Navigated paths: a walker that rides occupied sites toward a target.

The walker ``Y`` sits on an occupied site.  It reacts to the decision
marks of its own site and of the neighbors one step closer to the target:
if a closer neighbor becomes occupied, ``Y`` moves there; if its own site
empties, ``Y`` moves to the occupied neighbor closest to the target (lowest
id on ties).  Reaching the target absorbs the walker.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import Trajectory
from .engine import navigate_batch
from .graph import bfs_distances, build_window
from .harris import HarrisScheme
from .stats import binomial_se, weighted_mean_se


class NavigationError(ValueError):
    pass


@dataclass(frozen=True)
class NavigatedPath:
    start: int
    target: int
    tau: float
    jumps: tuple[tuple[float, int], ...] = ()
    arrival: float | None = None
    failures: int = 0
    down_steps: int = 0
    up_steps: int = 0
    level_steps: int = 0

    @property
    def arrived(self) -> bool:
        return self.arrival is not None

    def site_at(self, t: float) -> int:
        site = self.start
        for tj, y in self.jumps:
            if tj > t:
                break
            site = y
        return site

    def check_occupied(self, tr: Trajectory) -> bool:
        """Whether ``Y`` sits on an occupied site on ``[tau, end]``.

        The end is the arrival time, or the horizon for an unfinished path.
        At its own emptying mark the walker leaves at that very instant, so
        each piece is checked on ``[enter, leave)``.
        """
        end = self.arrival if self.arrival is not None else tr.horizon
        pieces = [(self.tau, self.start)] + list(self.jumps)
        for k, (a, y) in enumerate(pieces):
            b = pieces[k + 1][0] if k + 1 < len(pieces) else end
            if tr.value_at(y, a) != 1:
                return False
            times, _ = tr.site_changes(y)
            if any(a < c < b and tr.value_at(y, c) == 0 for c in times):
                return False
        return True


def navigate(tr: Trajectory, x: int, target: int, tau: float, s: HarrisScheme | None = None) -> NavigatedPath:
    """Run the navigation rule on a realized trajectory, starting at ``(x, tau)``."""
    s = tr.scheme if s is None else s
    if s is not tr.scheme:
        raise NavigationError("trajectory was not built on this scheme")
    g = s.graph
    g.check_site(x)
    g.check_site(target)
    if not 0 <= tau <= s.horizon:
        raise NavigationError("tau outside the horizon")
    if tr.value_at(x, tau) != 1:
        raise NavigationError(f"start site {x} is empty at time {tau}")
    if x == target:
        return NavigatedPath(x, target, tau, arrival=tau)
    dist = bfs_distances(g, target)
    adj = g.adjacency
    y = x
    jumps = []
    fail = down = up = level = 0
    times, sites, _ = s.events
    k0 = int(np.searchsorted(times, tau, side="right"))
    for t, z in zip(times[k0:].tolist(), sites[k0:].tolist()):
        if z == y:
            if tr.value_at(y, t) == 1:
                continue
            occ = [w for w in adj[y] if tr.value_at(w, t) == 1]
            if not occ:
                fail += 1
                continue
            nxt = min(occ, key=lambda w: (dist[w], w))
        elif dist[z] == dist[y] - 1 and z in adj[y] and tr.value_at(z, t) == 1:
            nxt = z
        else:
            continue
        d_old, d_new = dist[y], dist[nxt]
        down += d_new < d_old
        up += d_new > d_old
        level += d_new == d_old
        y = nxt
        jumps.append((t, y))
        if y == target:
            return NavigatedPath(x, target, tau, tuple(jumps), t, fail, down, up, level)
    return NavigatedPath(x, target, tau, tuple(jumps), None, fail, down, up, level)


def navigation_event(tr: Trajectory, sites, a: float, b: float) -> bool:
    """Sufficient witness for the navigation event on ``[a, b]``.

    Starts at the first time in ``[a, b]`` when ``sites[0]`` is occupied and
    chains :func:`navigate` calls through the listed sites in order.
    """
    sites = list(sites)
    if not sites:
        raise NavigationError("empty site list")
    if not a < b <= tr.horizon:
        raise NavigationError("need a < b <= horizon")
    x0 = sites[0]
    start = None
    if tr.value_at(x0, a) == 1:
        start = a
    else:
        times, values = tr.site_changes(x0)
        start = next((c for c, v in zip(times, values) if a < c <= b and v == 1), None)
    if start is None:
        return False
    now, here = start, x0
    for nxt in sites[1:]:
        p = navigate(tr, here, nxt, now)
        if p.arrival is None or p.arrival > b:
            return False
        now, here = p.arrival, nxt
    return True


# ------------------------------------------------------------- statistics


@dataclass(frozen=True)
class HittingStats:
    q: float
    d: int
    replicas: int
    mean: float
    se: float
    bound: float
    censored: int
    down_fraction: float
    down_fraction_se: float
    failures: int

    def row(self) -> dict:
        return {"q": self.q, "d": self.d, "replicas": self.replicas, "mean": self.mean,
                "se": self.se, "bound": self.bound}


def hitting_bound(q: float, d: int) -> float:
    if not q > 0.5:
        raise NavigationError("the hitting bound needs q > 1/2")
    return d / (2 * q - 1)


def hitting_stats(q: float, d: int, replicas: int, horizon: float | None = None,
                  rng: np.random.Generator | None = None, pad: int = 10) -> HittingStats:
    """Mean hitting time from an all-occupied start at distance ``d``.

    Uses a half-line window of ``d + pad + 1`` sites with the walker at the
    origin and the target at distance ``d``.  Paths still running at the horizon are
    counted as censored and enter the mean at the horizon, which can only
    bias the estimate downward by a negligible amount for the default
    horizon of ``10 * bound + 50``.
    """
    bound = hitting_bound(q, d)
    if d < 0:
        raise NavigationError("distance must be nonnegative")
    rng = np.random.default_rng() if rng is None else rng
    if d == 0:
        return HittingStats(q, 0, replicas, 0.0, 0.0, 0.0, 0, math.nan, math.nan, 0)
    horizon = 10 * bound + 50 if horizon is None else horizon
    g = build_window("half_line", d + pad)
    start, target = 0, d
    init = np.ones((replicas, g.n), dtype=np.int8)
    nb = navigate_batch(g, q, init, start, target, 0.0, horizon, rng)
    censored = int(np.isnan(nb.arrival).sum())
    hit = np.where(np.isnan(nb.arrival), horizon, nb.arrival)
    mean, se = weighted_mean_se(hit)
    moves = nb.down_steps + nb.up_steps + nb.level_steps
    total = int(moves.sum())
    frac = nb.down_steps.sum() / total if total else math.nan
    return HittingStats(q, d, replicas, mean, se, bound, censored, float(frac),
                        float(binomial_se(frac, total)) if total else math.nan, int(nb.failures.sum()))


@dataclass(frozen=True)
class NavigationProbability:
    t: np.ndarray
    prob: np.ndarray
    se: np.ndarray
    n_sites: np.ndarray


def navigation_probability(q: float, L: float, t_grid, replicas: int,
                           rng: np.random.Generator | None = None, pad: int = 10) -> NavigationProbability:
    """Estimate of P(walker from a lone particle at ``z_0`` visits ``z_1..z_{floor(L t)}`` by ``t``).

    On a half-line the walker moves along edges, so reaching ``z_n`` means
    visiting every intermediate site.
    """
    rng = np.random.default_rng() if rng is None else rng
    t_grid = np.asarray(t_grid, dtype=float)
    probs, ses, ns = [], [], []
    for t in t_grid:
        n = int(math.floor(L * t))
        ns.append(n)
        if n == 0:
            probs.append(1.0)
            ses.append(0.0)
            continue
        g = build_window("half_line", n + pad)
        init = np.zeros((replicas, g.n), dtype=np.int8)
        init[:, 0] = 1
        nb = navigate_batch(g, q, init, 0, n, 0.0, t, rng)
        p = float(np.mean(~np.isnan(nb.arrival)))
        probs.append(p)
        ses.append(float(binomial_se(p, replicas)))
    return NavigationProbability(t_grid, np.array(probs), np.array(ses), np.array(ns))
