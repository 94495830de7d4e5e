"""Vectorized replica engine.

Many independent copies of the Harris construction are advanced together:
each replica's marks are drawn as the superposition of its per-site
rate-one clocks (total rate ``n``, uniform site, Bernoulli(q) mark), which
has the same law as sampling the per-site processes and merging them.
One numpy step consumes the next mark of every live replica.

Replicas below ``record`` keep their marks so they can be rebuilt as
:class:`~fa1f.harris.HarrisScheme` objects and replayed through the scalar
reference code.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import GraphView, bfs_distances
from .harris import HarrisScheme


def light_cone_radius(t: float, eps: float = 1e-9) -> int:
    """Line distance beyond which influence within time ``t`` has probability < ``eps``.

    On a line the set of sites reachable by influence from beyond a cut is
    an interval whose inner end advances by one each time the next site
    rings, a rate-one Poisson clock.  The radius is the ``eps`` upper
    quantile of Poisson(``t``).  Not valid for windows with branching.
    """
    from scipy.stats import poisson

    if t <= 0:
        return 0
    return int(poisson.isf(eps, t)) + 1


class MarkStream:
    """Next-mark generator for ``n_replicas`` superposed Harris schemes."""

    def __init__(self, g: GraphView, q: float, horizon: float, n_replicas: int,
                 rng: np.random.Generator, record: int = 0):
        self.g = g
        self.q = q
        self.horizon = float(horizon)
        self.rng = rng
        self.t = np.zeros(n_replicas)
        self.live = np.arange(n_replicas)
        self.record = min(record, n_replicas)
        self._log: list[list[tuple[int, float, int]]] = [[] for _ in range(self.record)]

    def __bool__(self) -> bool:
        return self.live.size > 0

    def propose(self) -> tuple[np.ndarray, np.ndarray]:
        """Candidate next times for live replicas (may exceed the horizon)."""
        return self.live, self.t[self.live] + self.rng.exponential(1.0 / self.g.n, self.live.size)

    def commit(self, rows: np.ndarray, t_new: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Retire replicas past the horizon and draw sites and marks for the rest."""
        keep = t_new <= self.horizon
        rows, t_new = rows[keep], t_new[keep]
        self.live = rows
        self.t[rows] = t_new
        sites = self.rng.integers(0, self.g.n, rows.size)
        gammas = (self.rng.random(rows.size) < self.q).astype(np.int8)
        if self.record:
            for r, tt, x, gm in zip(rows[rows < self.record].tolist(), t_new[rows < self.record].tolist(),
                                    sites[rows < self.record].tolist(), gammas[rows < self.record].tolist()):
                self._log[r].append((x, tt, gm))
        return rows, t_new, sites, gammas

    def drop(self, rows: np.ndarray) -> None:
        """Stop generating marks for ``rows`` (their remaining marks are not recorded)."""
        self.live = np.setdiff1d(self.live, rows, assume_unique=True)

    def scheme(self, r: int) -> HarrisScheme:
        """Rebuild replica ``r`` (must be recorded) as a scalar scheme."""
        marks: dict[int, list[tuple[float, int]]] = {}
        for x, tt, gm in self._log[r]:
            marks.setdefault(x, []).append((tt, gm))
        return HarrisScheme.from_marks(self.g, self.horizon, self.q, marks)


def _padded(states: np.ndarray) -> np.ndarray:
    r, n = states.shape
    out = np.zeros((r, n + 1), dtype=np.int8)
    out[:, :n] = states
    return out


def _apply(state: np.ndarray, nbr: np.ndarray, rows: np.ndarray, sites: np.ndarray, gammas: np.ndarray) -> None:
    facilitated = state[rows[:, None], nbr[sites]].any(axis=1)
    state[rows[facilitated], sites[facilitated]] = gammas[facilitated]


@dataclass
class BatchRun:
    """Snapshots ``(marginal, grid point, replica, observed site)``."""

    t_grid: np.ndarray
    observe: np.ndarray
    snapshots: np.ndarray
    stream: MarkStream


def evolve_batch(g: GraphView, q: float, inits: list[np.ndarray], t_grid, rng: np.random.Generator,
                 observe=None, record: int = 0) -> BatchRun:
    """Evolve one or more marginals per replica on shared superposed marks.

    ``inits`` holds one ``(replicas, n)`` array per marginal; every
    marginal of a replica sees the same marks, as in a coupled pair.
    Snapshots follow the right-continuous convention.
    """
    t_grid = np.asarray(sorted(t_grid), dtype=float)
    if t_grid.size == 0 or t_grid[0] < 0:
        raise ValueError("t_grid must be nonempty and nonnegative")
    observe = np.arange(g.n) if observe is None else np.asarray(observe, dtype=np.int64)
    n_rep = inits[0].shape[0]
    states = [_padded(np.asarray(a, dtype=np.int8)) for a in inits]
    snaps = np.zeros((len(states), t_grid.size, n_rep, observe.size), dtype=np.int8)
    nxt = np.zeros(n_rep, dtype=np.int64)
    stream = MarkStream(g, q, t_grid[-1], n_rep, rng, record)
    nbr = g.neighbor_table
    g_ext = np.append(t_grid, np.inf)
    while stream:
        rows, t_new = stream.propose()
        due = g_ext[nxt[rows]] < t_new
        while due.any():
            r = rows[due]
            for m, st in enumerate(states):
                snaps[m, nxt[r], r, :] = st[r][:, observe]
            nxt[r] += 1
            due = g_ext[nxt[rows]] < t_new
        rows, t_new, sites, gammas = stream.commit(rows, t_new)
        for st in states:
            _apply(st, nbr, rows, sites, gammas)
    return BatchRun(t_grid, observe, snaps, stream)


# ------------------------------------------------------------- navigation


@dataclass
class NavigationBatch:
    arrival: np.ndarray
    down_steps: np.ndarray
    up_steps: np.ndarray
    level_steps: np.ndarray
    failures: np.ndarray
    stream: MarkStream


def navigate_batch(g: GraphView, q: float, init: np.ndarray, start: int, target: int, tau: float,
                   horizon: float, rng: np.random.Generator, record: int = 0) -> NavigationBatch:
    """Navigated paths from ``start`` to ``target`` for every replica.

    The FA1f process runs from time 0 and the walker starts at ``tau``;
    ``start`` must be occupied at ``tau`` (always true for ``tau = 0`` with
    an occupied start).  ``arrival`` is the absolute hitting time, ``nan``
    when the horizon ends first.
    """
    n_rep = init.shape[0]
    state = _padded(np.asarray(init, dtype=np.int8))
    nbr = g.neighbor_table
    big = 10**9
    dist = np.append(bfs_distances(g, target), big)
    Y = np.full(n_rep, start, dtype=np.int64)
    arrival = np.full(n_rep, np.nan)
    down = np.zeros(n_rep, dtype=np.int64)
    up = np.zeros(n_rep, dtype=np.int64)
    level = np.zeros(n_rep, dtype=np.int64)
    fail = np.zeros(n_rep, dtype=np.int64)
    stream = MarkStream(g, q, horizon, n_rep, rng, record)
    if start == target:
        arrival[:] = tau
        return NavigationBatch(arrival, down, up, level, fail, stream)
    while stream:
        rows, t_new = stream.propose()
        rows, t_new, sites, gammas = stream.commit(rows, t_new)
        _apply(state, nbr, rows, sites, gammas)
        on = t_new > tau
        if not on.any():
            continue
        rows, t_new, sites = rows[on], t_new[on], sites[on]
        y = Y[rows]
        own = sites == y
        lost = own & (state[rows, y] == 0)
        moved_to = y.copy()
        if lost.any():
            cand = nbr[y[lost]]
            occ = state[rows[lost][:, None], cand] == 1
            key = np.where(occ, dist[cand] * (g.n + 1) + cand, np.iinfo(np.int64).max)
            pick = cand[np.arange(cand.shape[0]), key.argmin(axis=1)]
            none = ~occ.any(axis=1)
            fail[rows[lost][none]] += 1
            moved_to[np.flatnonzero(lost)[~none]] = pick[~none]
        closer = (~own & (dist[sites] == dist[y] - 1) & (nbr[y] == sites[:, None]).any(axis=1)
                  & (state[rows, sites] == 1))
        moved_to[closer] = sites[closer]
        moved = moved_to != y
        if moved.any():
            delta = dist[moved_to[moved]] - dist[y[moved]]
            r = rows[moved]
            down[r] += delta < 0
            up[r] += delta > 0
            level[r] += delta == 0
            Y[r] = moved_to[moved]
            hit = moved_to[moved] == target
            arrival[r[hit]] = t_new[moved][hit]
            stream.drop(r[hit])
    return NavigationBatch(arrival, down, up, level, fail, stream)


# ----------------------------------------------------------- contact coupling


@dataclass
class ContactBatch:
    """Per-replica contact-process domination results."""

    violations: np.ndarray
    stay_trials: int
    stay_successes: int
    xi: np.ndarray
    eta: np.ndarray
    stream: MarkStream


def contact_step(xi: np.ndarray, first0: np.ndarray, first1: np.ndarray) -> np.ndarray:
    """One step of the Harris-coupled contact process (rows are replicas).

    ``first0``/``first1`` hold the first type-0/type-1 mark offsets in the
    block (``inf`` when absent).  A site is occupied next step only on the
    explicit events that force the FA1f spin to one at the block end.
    """
    clean = np.isinf(first0)
    left = np.zeros_like(xi)
    right = np.zeros_like(xi)
    left[:, 1:] = xi[:, :-1]
    right[:, :-1] = xi[:, 1:]
    w0_left = np.full_like(first0, -np.inf)
    w0_right = np.full_like(first0, -np.inf)
    w0_left[:, 1:] = np.where(left[:, 1:] == 1, first0[:, :-1], -np.inf)
    w0_right[:, :-1] = np.where(right[:, :-1] == 1, first0[:, 1:], -np.inf)
    # occupied neighbors keep their spin until their first type-0 mark
    shield = np.maximum(w0_left, w0_right)
    stay = (xi == 1) & clean
    born = (xi == 0) & clean & (first1 < shield)
    return (stay | born).astype(np.int8)


def contact_batch(g: GraphView, q: float, init: np.ndarray, line: np.ndarray, theta: float, n_steps: int,
                  rng: np.random.Generator, record: int = 0, keep_history: bool = False) -> ContactBatch:
    n_rep = init.shape[0]
    line = np.asarray(line, dtype=np.int64)
    pos = np.full(g.n, -1, dtype=np.int64)
    pos[line] = np.arange(line.size)
    state = _padded(np.asarray(init, dtype=np.int8))
    nbr = g.neighbor_table
    xi = state[:, line].copy()
    first0 = np.full((n_rep, line.size), np.inf)
    first1 = np.full((n_rep, line.size), np.inf)
    block = np.zeros(n_rep, dtype=np.int64)
    violations = np.zeros(n_rep, dtype=np.int64)
    trials = 0
    successes = 0
    xi_steps = np.zeros((n_steps + 1, n_rep, line.size), dtype=np.int8) if keep_history else None
    eta_steps = np.zeros((n_steps + 1, n_rep, line.size), dtype=np.int8) if keep_history else None
    if keep_history:
        xi_steps[0] = xi
        eta_steps[0] = xi
    stream = MarkStream(g, q, theta * n_steps, n_rep, rng, record)
    while stream:
        rows, t_new = stream.propose()
        ends = theta * (block[rows] + 1)
        due = (t_new > ends) & (block[rows] < n_steps)
        while due.any():
            r = rows[due]
            old = xi[r]
            new = contact_step(old, first0[r], first1[r])
            trials += int(old.sum())
            successes += int(((old == 1) & np.isinf(first0[r])).sum())
            eta_now = state[r][:, line]
            violations[r] += (new > eta_now).sum(axis=1)
            xi[r] = new
            first0[r] = np.inf
            first1[r] = np.inf
            block[r] += 1
            if keep_history:
                xi_steps[block[r], r] = new
                eta_steps[block[r], r] = eta_now
            ends = theta * (block[rows] + 1)
            due = (t_new > ends) & (block[rows] < n_steps)
        rows, t_new, sites, gammas = stream.commit(rows, t_new)
        _apply(state, nbr, rows, sites, gammas)
        p = pos[sites]
        on = p >= 0
        if on.any():
            r, pp, gm = rows[on], p[on], gammas[on]
            off = t_new[on] - theta * block[r]
            f0 = (gm == 0) & np.isinf(first0[r, pp])
            first0[r[f0], pp[f0]] = off[f0]
            f1 = (gm == 1) & np.isinf(first1[r, pp])
            first1[r[f1], pp[f1]] = off[f1]
    return ContactBatch(violations, trials, successes, xi_steps if keep_history else xi,
                        eta_steps if keep_history else None, stream)
