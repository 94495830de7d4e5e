"""Encounters between dual paths and percolating good intervals, and the
end-to-end activation decay experiment.

A dual path of ``(x, t)`` encounters the interval ``(w, i)`` when it sits at
``w`` at some dual time in ``[iK/2, (i+1)K/2]``.  A good interval is called
surviving when the semi-oriented process started there on the half-line
through ``w`` is still alive at dual level ``t / (2K)``, that is, dual time
``t/4``.
"""

from __future__ import annotations

import heapq
import math
from bisect import bisect_left
from dataclasses import dataclass, field as dc_field

import numpy as np

from .dual import InconsistencyError, both_occupied_on, iter_dual_paths
from .dynamics import (BernoulliConditioned, CoupledTrajectory, Delta, Explicit, InitialLaw,
                       is_t_activated, sample_bernoulli_conditioned)
from .engine import light_cone_radius
from .kernels import evolve_many, replica_seeds
from .graph import GraphView, HalfLine, build_window, distance_to_set, extend_half_line
from .harris import HarrisScheme, sample_scheme
from .renorm import GoodField, RenormParams, classify_intervals, run_semi_oriented
from .stats import FitError, FitResult, binomial_se, fit_exponential


class CensusError(ValueError):
    pass


def top_level(K: float, t: float) -> int:
    return int(math.floor(t / (2 * K)))


class SurvivalOracle:
    """Cached ``(w, i)`` -> good and surviving to level ``top``."""

    def __init__(self, g: GraphView, field: GoodField, z_line: HalfLine, top: int):
        if top >= field.n_levels:
            raise CensusError("field does not reach the survival level")
        self.g, self.field, self.z_line, self.top = g, field, z_line, top
        self._cache: dict[tuple[int, int], bool] = {}

    def good(self, w: int, i: int) -> bool:
        return i < self.field.n_levels and self.field.is_good(w, i)

    def surviving(self, w: int, i: int) -> bool:
        key = (w, i)
        if key not in self._cache:
            ok = self.good(w, i)
            if ok and i < self.top:
                line = extend_half_line(self.g, w, self.z_line).sites
                steps = self.top - i
                if len(line) <= steps:
                    raise CensusError(f"half-line through {w} too short for {steps} steps")
                ok = run_semi_oriented(self.field, line, i, steps).nu is None
            self._cache[key] = ok
        return self._cache[key]


@dataclass(frozen=True)
class EncounterRecord:
    path_id: int
    site: int | None
    level: int | None
    time: float | None
    good: bool
    survives: bool
    agree: bool


@dataclass
class CensusSummary:
    n_paths: int
    truncated: bool
    frac_good: float
    frac_surviving: float
    frac_agree: float
    t_activated: bool
    records: list[EncounterRecord] = dc_field(default_factory=list)

    def as_dict(self) -> dict:
        return {"n_paths": self.n_paths, "truncated": self.truncated, "frac_good": self.frac_good,
                "frac_surviving": self.frac_surviving, "frac_agree": self.frac_agree,
                "t_activated": self.t_activated}


def _visits(path, K: float, depth: float):
    """``(level, dual_start, dual_end, site)`` for every window visit, in dual order."""
    cuts = [0.0] + [s for s, _ in path.jumps] + [depth]
    out = []
    for k, site in enumerate(path.sites):
        a, b = cuts[k], cuts[k + 1]
        i = int(a // (K / 2))
        while i * K / 2 <= b:
            lo, hi = max(a, i * K / 2), min(b, (i + 1) * K / 2)
            if lo <= hi:
                out.append((i, lo, hi, site))
            i += 1
    out.sort(key=lambda v: (v[0], v[1]))
    return out


def encounter_census(ct: CoupledTrajectory, field: GoodField, x: int, sigma: float, z_line: HalfLine,
                     cap: int = 100_000) -> CensusSummary:
    """First good interval met by every path of ``D(x, t, (1 - sigma) t)``.

    ``field`` must be classified from the coupled scheme; ``t`` and ``K``
    are read from it.  If every path of an untruncated enumeration meets a
    point where both marginals are occupied, ``x`` must be t-activated;
    a counterexample raises :class:`~fa1f.dual.InconsistencyError`.
    """
    if field.K is None or field.t is None:
        raise CensusError("field must carry K and t")
    if not 0 < sigma < 0.25:
        raise CensusError("need 0 < sigma < 1/4")
    K, t = field.K, field.t
    tau = (1 - sigma) * t
    depth = t - tau
    oracle = SurvivalOracle(ct.scheme.graph, field, z_line, top_level(K, t))
    records = []
    truncated = False
    for pid, p in enumerate(iter_dual_paths(ct.scheme, x, t, tau)):
        if pid == cap:
            truncated = True
            break
        rec = EncounterRecord(pid, None, None, None, False, False, False)
        for i, lo, hi, w in _visits(p, K, depth):
            if oracle.good(w, i):
                agree = both_occupied_on(ct, w, t - hi, t - lo, hi_closed=lo > 0)
                rec = EncounterRecord(pid, w, i, t - lo, True, oracle.surviving(w, i), agree)
                break
        records.append(rec)
    n = len(records)
    activated = is_t_activated(ct, x, t)
    all_agree = n > 0 and all(r.agree for r in records)
    if all_agree and not truncated and not activated:
        raise InconsistencyError(f"every dual path of ({x}, {t}) meets agreement at one, yet x is not t-activated")
    frac = lambda f: sum(f(r) for r in records) / n if n else math.nan  # noqa: E731
    return CensusSummary(n, truncated, frac(lambda r: r.good), frac(lambda r: r.survives),
                         frac(lambda r: r.agree), activated, records)


def _free_runs(bad_levels: list[int], K: float, depth: float) -> list[tuple[float, float, bool]]:
    """Open dual-time intervals of ``[0, depth]`` outside the closed bad windows.

    The flag marks the run that reaches the cutoff ``depth`` itself, which
    the path occupies; a bad window starting exactly there blocks it.
    """
    runs, start = [], 0.0
    for i in sorted(bad_levels):
        a, b = i * K / 2, (i + 1) * K / 2
        if a > depth:
            break
        if a > start:
            runs.append((start, a, False))
        start = max(start, b)
    if start < depth:
        runs.append((start, depth, True))
    return runs


def avoiding_path_exists(s: HarrisScheme, x: int, t: float, tau: float, K: float, forbidden) -> bool:
    """Whether some path of ``D(x, t, tau)`` meets no forbidden interval.

    ``forbidden(w, i)`` flags intervals to avoid.  States are (site, free
    run); arriving earlier inside a run dominates arriving later, so a
    search by earliest arrival time is exact.
    """
    depth = t - tau
    n_lv = int(depth // (K / 2)) + 1
    runs_of: dict[int, list[tuple[float, float]]] = {}

    def runs(w: int):
        if w not in runs_of:
            runs_of[w] = _free_runs([i for i in range(n_lv) if forbidden(w, i)], K, depth)
        return runs_of[w]

    r0 = runs(x)
    if not r0 or r0[0][0] > 0.0:
        return False
    best: dict[tuple[int, int], float] = {(x, 0): 0.0}
    heap = [(0.0, x, 0)]
    adj = s.graph.adjacency
    while heap:
        arr, w, k = heapq.heappop(heap)
        if arr > best.get((w, k), math.inf):
            continue
        lo, hi, last = runs(w)[k]
        if last:
            return True
        # leave w at one of its decision times inside the run
        for r in s.times[w][(s.times[w] > t - hi) & (s.times[w] < t - arr)].tolist():
            u = t - r
            for v in adj[w]:
                rv = runs(v)
                j = bisect_left([b for _, b, _ in rv], u)
                if j < len(rv) and rv[j][0] < u < rv[j][1] and u < best.get((v, j), math.inf):
                    best[(v, j)] = u
                    heapq.heappush(heap, (u, v, j))
    return False


@dataclass(frozen=True)
class CensusTrend:
    K: float
    sigma: float
    t: np.ndarray
    p_avoid: np.ndarray
    se: np.ndarray
    replicas: int

    def as_dict(self) -> dict:
        return {"K": self.K, "sigma": self.sigma, "t": self.t.tolist(), "p_avoid": self.p_avoid.tolist(),
                "se": self.se.tolist(), "replicas": self.replicas}


def census_trend(K: float, t_grid, sigma: float, replicas: int, seed: int, n_sites: int = 161) -> CensusTrend:
    """P(some dual path avoids every surviving good interval) on a path window.

    ``x`` is the middle site and ``Z`` runs along the window by increasing id.
    """
    if not 0 < sigma < 0.25:
        raise CensusError("need 0 < sigma < 1/4")
    g = build_window("half_line", n_sites - 1)
    z_line = HalfLine(tuple(range(g.n)))
    x = g.n // 2
    out, ses = [], []
    for ti, t in enumerate(t_grid):
        params = RenormParams(K, float(t))
        top = top_level(K, t)
        if x + top + 1 >= g.n:
            raise CensusError("window too short for the survival level")
        hits = 0
        for r in range(replicas):
            s = sample_scheme(g, float(t), params.q, seed + 1_000_003 * ti + r)
            field = classify_intervals(s, range(g.n), params, n_levels=top + 2)
            oracle = SurvivalOracle(g, field, z_line, top)
            hits += avoiding_path_exists(s, x, float(t), (1 - sigma) * t, K, oracle.surviving)
        p = hits / replicas
        out.append(p)
        ses.append(float(binomial_se(p, replicas)))
    return CensusTrend(K, sigma, np.asarray(t_grid, dtype=float), np.array(out), np.array(ses), replicas)


# ------------------------------------------------------------- assembly


def _initial_batch(law: InitialLaw, g: GraphView, replicas: int, rng: np.random.Generator) -> np.ndarray:
    if isinstance(law, Delta):
        a = np.zeros((replicas, g.n), dtype=np.int8)
        a[:, g.check_site(law.site)] = 1
        return a
    if isinstance(law, BernoulliConditioned):
        a = (rng.random((replicas, g.n)) < law.q).astype(np.int8)
        for r in np.flatnonzero(~a.any(axis=1)):
            a[r] = sample_bernoulli_conditioned(law.q, g.n, rng)
        return a
    if isinstance(law, Explicit):
        return np.tile(np.asarray(law.config, dtype=np.int8), (replicas, 1))
    raise CensusError(f"unknown initial law {law!r}")


def initial_mismatch(g: GraphView, y: int, x: int, q: float) -> float:
    """``P(eta~_0(x) != delta_y(x))`` under the conditioned product law."""
    z = 1.0 - (1.0 - q) ** g.n
    p_one = q / z
    return 1.0 - p_one if x == y else p_one


@dataclass(frozen=True)
class MarginReport:
    light_cone: int
    distance_to_boundary: int
    ok: bool


def margin_report(g: GraphView, sites, t_max: float, eps: float = 1e-9) -> MarginReport:
    cone = light_cone_radius(t_max, eps)
    if g.boundary:
        d = distance_to_set(g, g.boundary)
        dist = int(min(d[x] for x in sites))
    else:
        dist = g.n
    return MarginReport(cone, dist, dist > cone)


@dataclass(frozen=True)
class AssemblyResult:
    t: np.ndarray
    p_hat: np.ndarray
    se: np.ndarray
    fit: FitResult | None
    initial_mismatch: float
    margin: MarginReport
    replicas: int
    sigma: float
    truncated: bool = False

    def rows(self):
        for t, p, s in zip(self.t, self.p_hat, self.se):
            yield {"t": float(t), "p_hat": float(p), "se": float(s)}

    def strictly_decreasing(self, k: float = 3.0) -> bool:
        """Every consecutive drop is positive beyond ``k`` combined SE."""
        d = self.p_hat[:-1] - self.p_hat[1:]
        return bool(np.all(d > k * np.hypot(self.se[:-1], self.se[1:])))


def assembly_experiment(g: GraphView, y: int, x: int, q: float, t_grid, sigma: float, replicas: int,
                        rng: np.random.Generator, law1: InitialLaw | None = None,
                        law2: InitialLaw | None = None, budget=None, chunk: int = 1000) -> AssemblyResult:
    """Estimate ``P(eta_t(x) differs)`` under the basic coupling of two initial laws.

    The defaults are ``(delta_y, nu_q)``; disagreement at ``x`` implies that
    ``x`` is not t-activated.

    Every replica is snapshotted at each grid time.  Replicas run in chunks;
    ``budget`` is an optional callable returning ``True`` once the
    wall-clock budget is spent, after which the remaining chunks are
    skipped and the result is flagged as truncated.
    """
    t_grid = np.asarray(sorted(t_grid), dtype=float)
    if not 0 < sigma < 0.25:
        raise CensusError("need 0 < sigma < 1/4")
    margin = margin_report(g, (x, y), float(t_grid[-1]))
    if not margin.ok:
        raise CensusError(f"light cone {margin.light_cone} reaches the window boundary "
                          f"(distance {margin.distance_to_boundary})")
    law1 = Delta(y) if law1 is None else law1
    law2 = BernoulliConditioned(q) if law2 is None else law2
    seeds = replica_seeds(rng, replicas)
    fails = np.zeros(t_grid.size, dtype=np.int64)
    done = 0
    truncated = False
    for c0 in range(0, replicas, chunk):
        if budget is not None and budget():
            truncated = True
            break
        sl = slice(c0, min(c0 + chunk, replicas))
        size = sl.stop - sl.start
        a = _initial_batch(law1, g, size, rng)
        b = _initial_batch(law2, g, size, rng)
        snaps = evolve_many(g, q, [a, b], t_grid, seeds[sl], observe=[x])
        fails += (snaps[0, :, :, 0] != snaps[1, :, :, 0]).sum(axis=1)
        done = sl.stop
    if done == 0:
        raise CensusError("wall-clock budget exhausted before any replica finished")
    p = fails / done
    se = binomial_se(p, done)
    fit = None
    if t_grid.size >= 3 and np.all(p > 0):
        try:
            fit = fit_exponential(t_grid, p, se)
        except FitError:
            fit = None
    return AssemblyResult(t_grid, p, se, fit, initial_mismatch(g, y, x, q), margin, done, sigma, truncated)
