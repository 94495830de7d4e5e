"""Compiled per-replica FA1f kernel for large windows.

Each replica owns a seed; its marks are the superposition of the per-site
clocks (total rate ``n``, uniform site, Bernoulli(q) mark), drawn from the
compiled generator seeded with that value.  :func:`replica_scheme`
regenerates the same marks so any replica can be replayed through the
scalar reference code.  Replicas run in parallel, and because every
replica is seeded on its own the output does not depend on the number of
threads.
"""

from __future__ import annotations

import os

import numba
import numpy as np
from numba import njit, prange

if "NUMBA_THREADING_LAYER" not in os.environ:
    # the system TBB is too old for numba; avoid the probe and its warning
    numba.config.THREADING_LAYER = "workqueue"

from .graph import GraphView
from .harris import HarrisScheme


@njit(cache=True)
def _replica_marks(seed, n, q, horizon):
    np.random.seed(seed)
    cap = 16
    times = np.empty(cap)
    sites = np.empty(cap, dtype=np.int64)
    gammas = np.empty(cap, dtype=np.int8)
    k = 0
    t = 0.0
    while True:
        t += np.random.exponential(1.0 / n)
        if t > horizon:
            break
        if k == cap:
            cap *= 2
            times = np.concatenate((times, np.empty(cap - k)))
            sites = np.concatenate((sites, np.empty(cap - k, dtype=np.int64)))
            gammas = np.concatenate((gammas, np.empty(cap - k, dtype=np.int8)))
        times[k] = t
        sites[k] = np.random.randint(0, n)
        gammas[k] = 1 if np.random.random() < q else 0
        k += 1
    return times[:k], sites[:k], gammas[:k]


@njit(parallel=True, cache=True)
def _evolve_many(states, nbr, q, t_grid, observe, seeds):
    m_count, r_count, n = states.shape
    snaps = np.zeros((m_count, t_grid.size, r_count, observe.size), dtype=np.int8)
    horizon = t_grid[-1]
    for r in prange(r_count):
        np.random.seed(seeds[r])
        st = states[:, r, :].copy()
        k = 0
        t = 0.0
        while True:
            t += np.random.exponential(1.0 / n)
            while k < t_grid.size and t_grid[k] < t:
                for m in range(m_count):
                    for o in range(observe.size):
                        snaps[m, k, r, o] = st[m, observe[o]]
                k += 1
            if t > horizon:
                break
            x = np.random.randint(0, n)
            g = 1 if np.random.random() < q else 0
            for m in range(m_count):
                if st[m, x] == g:
                    continue
                for j in range(nbr.shape[1]):
                    y = nbr[x, j]
                    if y < 0:
                        break
                    if st[m, y] == 1:
                        st[m, x] = g
                        break
    return snaps


def _nbr_table(g: GraphView) -> np.ndarray:
    width = max(len(a) for a in g.adjacency)
    out = np.full((g.n, width), -1, dtype=np.int64)
    for x, a in enumerate(g.adjacency):
        out[x, :len(a)] = a
    return out


def replica_seeds(rng: np.random.Generator, replicas: int) -> np.ndarray:
    return rng.integers(0, 2**32 - 1, replicas, dtype=np.int64)


def evolve_many(g: GraphView, q: float, inits: list[np.ndarray], t_grid, seeds: np.ndarray,
                observe=None) -> np.ndarray:
    """Snapshots ``(marginal, grid point, replica, observed site)`` on shared marks.

    ``seeds`` holds one 32-bit seed per replica; ``inits`` one
    ``(replicas, n)`` array per marginal.
    """
    t_grid = np.asarray(sorted(t_grid), dtype=float)
    if t_grid.size == 0 or t_grid[0] < 0:
        raise ValueError("t_grid must be nonempty and nonnegative")
    observe = np.arange(g.n) if observe is None else np.asarray(observe, dtype=np.int64)
    states = np.ascontiguousarray(np.stack([np.asarray(a, dtype=np.int8) for a in inits]))
    seeds = np.asarray(seeds, dtype=np.int64)
    if seeds.shape != (states.shape[1],):
        raise ValueError("need one seed per replica")
    return _evolve_many(states, _nbr_table(g), float(q), t_grid, observe, seeds)


def replica_scheme(g: GraphView, q: float, horizon: float, seed: int) -> HarrisScheme:
    """The Harris scheme that :func:`evolve_many` uses for a replica seed."""
    times, sites, gammas = _replica_marks(int(seed), g.n, float(q), float(horizon))
    marks: dict[int, list[tuple[float, int]]] = {}
    for t, x, gm in zip(times.tolist(), sites.tolist(), gammas.tolist()):
        marks.setdefault(x, []).append((t, gm))
    return HarrisScheme.from_marks(g, horizon, q, marks)
