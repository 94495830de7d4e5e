"""Renormalized good intervals and the semi-oriented percolation process.

Dual time is cut into windows of length ``K/2``: window ``j`` is the real
time interval ``[t - (j+1)K/2, t - jK/2]``.  The interval ``(y, i)`` is good
when window ``i`` of ``y`` holds no type-0 mark and window ``i+1`` holds at
least one type-1 mark and no type-0 mark.  Good intervals drive a one-sided
semi-oriented process: a site is occupied at step ``n`` iff its interval at
level ``k+n`` is good and a line neighbor was occupied at step ``n-1``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .dynamics import CoupledTrajectory
from .harris import HarrisScheme
from .stats import FitResult, fit_exponential

log = logging.getLogger(__name__)


class RenormError(ValueError):
    pass


def q_of_K(K: float) -> float:
    """Mark bias making a window of length ``K`` free of type-0 marks w.p. ``1 - e^{-K/2}``."""
    if not K >= 1:
        raise RenormError("K must be at least 1")
    return 1.0 + math.log1p(-math.exp(-K / 2)) / K


def p_K_of(K: float) -> float:
    """Probability that an interval is bad under ``q = q_of_K(K)``."""
    q = q_of_K(K)
    p = -math.expm1(math.log1p(-math.exp(-K / 2)) + math.log1p(-math.exp(-q * K / 2)))
    bound = 2 * math.exp(-K / 2)
    if p > bound:
        raise RenormError(f"bad probability {p} exceeds 2 exp(-K/2) = {bound}")
    return p


def p_K_closed_form(K: float) -> float:
    """``e^{-K/2} (1 + sqrt(1 - e^{-K/2}))``, equal to :func:`p_K_of`.

    Uses ``e^{-qK/2} = e^{-K/2} / sqrt(1 - e^{-K/2})`` under ``q = q_of_K(K)``.
    """
    a = math.exp(-K / 2)
    return a * (1.0 + math.sqrt(1.0 - a))


def window_probabilities(K: float, q: float | None = None) -> tuple[float, float]:
    """``(P(no type-0 in a window), P(some type-1 in a window))`` for windows of length ``K/2``."""
    q = q_of_K(K) if q is None else q
    return math.exp(-(1 - q) * K / 2), -math.expm1(-q * K / 2)


@dataclass(frozen=True)
class RenormParams:
    K: float
    t: float

    def __post_init__(self):
        if not self.t > 4 * self.K:
            raise RenormError("need t > 4K")
        q_of_K(self.K)

    @property
    def q(self) -> float:
        return q_of_K(self.K)

    @property
    def n_levels(self) -> int:
        """Levels whose two windows lie inside ``[0, t]``."""
        return int(math.floor(2 * self.t / self.K + 1e-12)) - 1

    def window(self, j: int) -> tuple[float, float]:
        return self.t - (j + 1) * self.K / 2, self.t - j * self.K / 2


@dataclass(frozen=True, eq=False)
class GoodField:
    """Good flags ``good[row, level]`` for the listed sites."""

    sites: tuple[int, ...]
    good: np.ndarray
    K: float | None = None
    t: float | None = None

    @property
    def n_levels(self) -> int:
        return self.good.shape[1]

    def row(self, site: int) -> int:
        try:
            return self._rows[site]
        except KeyError:
            raise RenormError(f"site {site} not covered by the field") from None

    @property
    def _rows(self) -> dict[int, int]:
        rows = self.__dict__.get("_row_map")
        if rows is None:
            rows = {s: i for i, s in enumerate(self.sites)}
            object.__setattr__(self, "_row_map", rows)
        return rows

    def is_good(self, site: int, level: int) -> bool:
        if not 0 <= level < self.n_levels:
            raise RenormError(f"level {level} outside the field")
        return bool(self.good[self.row(site), level])

    def bad_fraction(self) -> float:
        return float(1.0 - self.good.mean())


def classify_intervals(s: HarrisScheme, sites, params: RenormParams, n_levels: int | None = None) -> GoodField:
    """Good flags from the Harris marks; windows are closed intervals."""
    if abs(s.q - params.q) > 1e-9:
        raise RenormError(f"scheme q={s.q} differs from q(K)={params.q}")
    if params.t > s.horizon:
        raise RenormError("t beyond the scheme horizon")
    levels = params.n_levels if n_levels is None else n_levels
    if not 1 <= levels <= params.n_levels:
        raise RenormError(f"need 1 <= n_levels <= {params.n_levels}")
    sites = tuple(int(x) for x in sites)
    t0, t1 = s.type_times
    j = np.arange(levels + 1)
    lo = params.t - (j + 1) * params.K / 2
    hi = params.t - j * params.K / 2
    good = np.zeros((len(sites), levels), dtype=bool)
    for r, y in enumerate(sites):
        zero = np.searchsorted(t0[y], hi, "right") - np.searchsorted(t0[y], lo, "left")
        one = np.searchsorted(t1[y], hi, "right") - np.searchsorted(t1[y], lo, "left")
        clean = zero == 0
        good[r] = clean[:-1] & clean[1:] & (one[1:] > 0)
    return GoodField(sites, good, params.K, params.t)


def sample_windows(n_sites: int, n_windows: int, K: float, rng: np.random.Generator,
                   q: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Per-window indicators ``(no type-0, some type-1)``, exact in law.

    Counts of the two mark types in disjoint windows are independent
    Poisson variables, so the indicators are independent Bernoulli draws.
    """
    a, b = window_probabilities(K, q)
    return rng.random((n_sites, n_windows)) < a, rng.random((n_sites, n_windows)) < b


def good_from_windows(clean: np.ndarray, has_one: np.ndarray) -> np.ndarray:
    return clean[:, :-1] & clean[:, 1:] & has_one[:, 1:]


def sample_good_field(sites, n_levels: int, K: float, rng: np.random.Generator) -> GoodField:
    sites = tuple(sites)
    clean, has_one = sample_windows(len(sites), n_levels + 1, K, rng)
    return GoodField(sites, good_from_windows(clean, has_one), K)


# -------------------------------------------------------- semi-oriented


@dataclass(frozen=True, eq=False)
class SemiOrientedState:
    """History ``xi[n, index]`` on ``line``; ``nu`` is ``None`` if alive at ``max_steps``."""

    line: tuple[int, ...]
    start: int
    offset: int
    xi: np.ndarray
    nu: int | None

    @property
    def right_edges(self) -> np.ndarray:
        """Largest occupied index per step, ``-1`` when empty."""
        occ = self.xi.any(axis=1)
        last = self.xi.shape[1] - 1 - np.argmax(self.xi[:, ::-1], axis=1)
        return np.where(occ, last, -1)

    def parity_ok(self) -> bool:
        n, x = np.nonzero(self.xi)
        return bool(np.all((n + np.abs(x - self.start)) % 2 == 0))


def semi_oriented_step(xi: np.ndarray, J: np.ndarray) -> np.ndarray:
    """``xi_n(x) = J(x, n) and (xi_{n-1}(x-1) or xi_{n-1}(x+1))`` along the last axis."""
    nb = np.zeros_like(xi)
    nb[..., 1:] |= xi[..., :-1]
    nb[..., :-1] |= xi[..., 1:]
    return nb & J


def run_semi_oriented(field: GoodField, line, offset: int, max_steps: int, start: int = 0) -> SemiOrientedState:
    """Deterministic semi-oriented run from ``delta_{line[start]}`` at level ``offset``."""
    line = tuple(int(x) for x in line)
    if offset + max_steps >= field.n_levels:
        raise RenormError("field does not cover the requested levels")
    rows = np.array([field.row(x) for x in line])
    xi = np.zeros(len(line), dtype=bool)
    xi[start] = True
    hist = [xi]
    nu = None
    for n in range(1, max_steps + 1):
        xi = semi_oriented_step(xi, field.good[rows, offset + n])
        hist.append(xi)
        if not xi.any():
            nu = n
            break
    return SemiOrientedState(line, start, offset, np.array(hist), nu)


def open_bonds(field: GoodField, line, offset: int, n: int) -> list[tuple[tuple[int, int], tuple[int, int]]]:
    """Open bonds from step ``n`` to ``n+1`` in the bond view of the process.

    The bond ``((x, n), (w, n+1))`` with ``|x - w| = 1`` is open when the
    interval of ``w`` at level ``offset + n + 1`` is good.
    """
    line = tuple(line)
    out = []
    for x in range(len(line)):
        for w in (x - 1, x + 1):
            if 0 <= w < len(line) and field.is_good(line[w], offset + n + 1):
                out.append(((x, n), (w, n + 1)))
    return out


# ---------------------------------------------------- batched sampling


@dataclass(frozen=True)
class SemiOrientedBatch:
    """Replica outcomes: ``nu`` (``-1`` when alive at the last step), right edges, IS weights."""

    nu: np.ndarray
    right_edges: np.ndarray
    weight: np.ndarray
    n_steps: int


def _bern(rng, p_row: np.ndarray, width: int) -> np.ndarray:
    return rng.random((p_row.size, width)) < p_row[:, None]


def semi_oriented_batch(K: float, replicas: int, n_steps: int, rng: np.random.Generator,
                        mixture=(1.0,), chunk: int = 200_000) -> SemiOrientedBatch:
    """Semi-oriented runs from ``delta_0`` on ``Z_+`` with fresh window indicators.

    ``mixture`` lists multipliers of the two window failure probabilities
    (no type-0 fails, no type-1 present); each replica draws one component
    uniformly.  Weights are the likelihood ratio of the true law to the
    mixture over the window indicators the run actually reads, so
    ``mean(weight * 1{event})`` is unbiased for any event of the run.  With
    ``mixture=(1.0,)`` every weight is one.
    """
    lam = np.asarray(mixture, dtype=float)
    if lam.ndim != 1 or lam.size == 0 or np.any(lam < 1.0):
        raise RenormError("mixture multipliers must be >= 1")
    a, b = window_probabilities(K)
    fa = np.minimum(lam * (1 - a), 0.5)
    fb = np.minimum(lam * (1 - b), 0.5)
    # log likelihood ratio per read indicator value, component vs true law
    la_bad, la_ok = np.log(fa / (1 - a)), np.log((1 - fa) / a)
    lb_bad, lb_ok = np.log(fb / (1 - b)), np.log((1 - fb) / b)
    width = n_steps + 2
    nus, edges, weights = [], [], []
    for c0 in range(0, replicas, chunk):
        C = min(chunk, replicas - c0)
        comp = rng.integers(0, lam.size, C)
        pa, pb = fa[comp], fb[comp]
        counts = np.zeros((C, 4), dtype=np.int64)  # A bad, A ok, B bad, B ok
        xi = np.zeros((C, width), dtype=bool)
        xi[:, 0] = True
        clean_cur = ~_bern(rng, pa, width)
        read_cur = np.zeros((C, width), dtype=bool)
        nu = np.full(C, -1, dtype=np.int64)
        edge = np.full((C, n_steps + 1), -1, dtype=np.int64)
        edge[:, 0] = 0
        for n in range(1, n_steps + 1):
            clean_next = ~_bern(rng, pa, width)
            has_one = ~_bern(rng, pb, width)
            nb = np.zeros_like(xi)
            nb[:, 1:] |= xi[:, :-1]
            nb[:, :-1] |= xi[:, 1:]
            read_cur |= nb
            counts[:, 0] += (read_cur & ~clean_cur).sum(axis=1)
            counts[:, 1] += (read_cur & clean_cur).sum(axis=1)
            counts[:, 2] += (nb & ~has_one).sum(axis=1)
            counts[:, 3] += (nb & has_one).sum(axis=1)
            xi = nb & clean_cur & clean_next & has_one
            occ = xi.any(axis=1)
            nu[(nu < 0) & ~occ] = n
            edge[:, n] = np.where(occ, width - 1 - np.argmax(xi[:, ::-1], axis=1), -1)
            clean_cur, read_cur = clean_next, nb
        counts[:, 0] += (read_cur & ~clean_cur).sum(axis=1)
        counts[:, 1] += (read_cur & clean_cur).sum(axis=1)
        if lam.size == 1 and lam[0] == 1.0:
            w = np.ones(C)
        else:
            ll = (counts[:, 0:1] * la_bad + counts[:, 1:2] * la_ok
                  + counts[:, 2:3] * lb_bad + counts[:, 3:4] * lb_ok)
            w = np.exp(-(logsumexp(ll, axis=1) - math.log(lam.size)))
        nus.append(nu)
        edges.append(edge)
        weights.append(w)
    return SemiOrientedBatch(np.concatenate(nus), np.concatenate(edges), np.concatenate(weights), n_steps)


def _weighted(values: np.ndarray) -> tuple[float, float]:
    n = values.size
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(n)) if n > 1 else math.inf


DEFAULT_MIXTURE = (1.0, 3.0, 10.0, 30.0, 100.0)


@dataclass(frozen=True)
class DeathTail:
    K: float
    n: np.ndarray
    p_hat: np.ndarray
    se: np.ndarray
    bound: np.ndarray
    extinction: float
    extinction_se: float
    fit: FitResult | None
    replicas: int
    n_cap: int

    def rows(self):
        for n, p, s, b in zip(self.n, self.p_hat, self.se, self.bound):
            yield {"K": self.K, "n": int(n), "p_hat": float(p), "se": float(s), "bound": float(b)}


def death_tail(K: float, replicas: int, n_max: int, rng: np.random.Generator, mixture=DEFAULT_MIXTURE,
               n_cap: int | None = None, fit_range: tuple[int, int] = (2, 8)) -> DeathTail:
    """Estimate ``P(nu >= n, nu < infinity)`` for ``n = 0..n_max``.

    ``nu < infinity`` is replaced by ``nu <= n_cap`` (default ``n_max + 12``);
    dying after ``n_cap`` needs a contour of length at least ``2 n_cap``, far
    below the reported values.  ``bound`` is ``exp(-K n / 4)`` (constant one).
    """
    n_cap = n_max + 12 if n_cap is None else n_cap
    if n_cap < n_max:
        raise RenormError("n_cap must be at least n_max")
    run = semi_oriented_batch(K, replicas, n_cap, rng, mixture)
    died = run.nu >= 0
    ns = np.arange(n_max + 1)
    p, se = [], []
    for n in ns:
        m, s = _weighted(run.weight * (died & (run.nu >= n)))
        p.append(m)
        se.append(s)
    p, se = np.array(p), np.array(se)
    ext, ext_se = _weighted(run.weight * died)
    lo, hi = fit_range
    use = (ns >= lo) & (ns <= hi) & (p > 0)
    fit = fit_exponential(ns[use], p[use], se[use]) if use.sum() >= 3 else None
    return DeathTail(K, ns, p, se, np.exp(-K * ns / 4), ext, ext_se, fit, replicas, n_cap)


@dataclass(frozen=True)
class RightEdgeCurve:
    K: float
    beta: float
    z: float
    n: np.ndarray
    p_hat: np.ndarray
    se: np.ndarray
    fit: FitResult | None


def right_edge_stats(K: float, beta: float, z: float, replicas: int, n_max: int, rng: np.random.Generator,
                     mixture=DEFAULT_MIXTURE) -> RightEdgeCurve:
    """Estimate ``P(r_n < beta n + z, nu > n)`` for ``n = 1..n_max`` with a geometric fit."""
    if not beta < 1:
        raise RenormError("beta must be below 1")
    run = semi_oriented_batch(K, replicas, n_max + 1, rng, mixture)
    ns = np.arange(1, n_max + 1)
    p, se = [], []
    for n in ns:
        alive = (run.nu < 0) | (run.nu > n)
        ev = alive & (run.right_edges[:, n] < beta * n + z)
        m, s = _weighted(run.weight * ev)
        p.append(m)
        se.append(s)
    p, se = np.array(p), np.array(se)
    use = p > 0
    fit = fit_exponential(ns[use], p[use], se[use]) if use.sum() >= 3 else None
    return RightEdgeCurve(K, beta, z, ns, p, se, fit)


# ---------------------------------------------------- subordinate chain


@dataclass(frozen=True)
class ChainEntry:
    restart: int
    offset: int
    lifetime: int | None


@dataclass(frozen=True)
class SubordinateChain:
    entries: tuple[ChainEntry, ...]
    survived: bool
    budget_exhausted: bool

    def to_json_lines(self) -> list[dict]:
        return [{"restart": e.restart, "offset": e.offset, "lifetime": e.lifetime} for e in self.entries]


def subordinate_chain(field: GoodField, line, start_level: int, budget: int, max_steps: int,
                      start: int = 0) -> SubordinateChain:
    """Restart the semi-oriented process on ``line`` after each death.

    After a run from index ``y`` at offset ``k`` dies at step ``nu``, the next
    run starts from the lowest occupied index at step ``nu - 1`` with offset
    ``k + nu``.  Stops when a run is still alive after ``max_steps`` steps,
    when ``budget`` runs were made, or when the field runs out of levels.
    """
    entries = []
    y, k = start, start_level
    for _ in range(budget):
        if k + max_steps >= field.n_levels:
            return SubordinateChain(tuple(entries), False, False)
        st = run_semi_oriented(field, line, k, max_steps, start=y)
        entries.append(ChainEntry(y, k, st.nu))
        if st.nu is None:
            return SubordinateChain(tuple(entries), True, False)
        y = int(np.flatnonzero(st.xi[st.nu - 1])[0])
        k += st.nu
    return SubordinateChain(tuple(entries), False, True)


# -------------------------------------------------------------- transport


@dataclass(frozen=True)
class TransportResult:
    """Per marginal: whether the precondition held and whether ``eta_t(y) = 1`` followed."""

    applicable: tuple[bool, ...]
    propagated: tuple[bool, ...]
    bottom_time: float

    @property
    def holds(self) -> bool:
        return all(p or not a for a, p in zip(self.applicable, self.propagated))


def transport_check(ct: CoupledTrajectory, field: GoodField, chain, offset: int = 2) -> TransportResult | None:
    """Check that a chain of good intervals carries occupancy to the top.

    ``chain = (y_0, ..., y_m)`` with ``(y_i, i)`` good for every ``i``.  If
    ``y_m`` is occupied at ``t - (m + offset) K / 2`` then ``y_0`` should be
    occupied at ``t``.  Returns ``None`` when some link is not good or not
    along an edge.
    """
    if field.K is None or field.t is None:
        raise RenormError("field must carry K and t")
    chain = tuple(int(x) for x in chain)
    g = ct.scheme.graph
    for a, b in zip(chain, chain[1:]):
        if not g.is_adjacent(a, b):
            return None
    if len(chain) > field.n_levels:
        return None
    if not all(field.is_good(y, i) for i, y in enumerate(chain)):
        return None
    m = len(chain) - 1
    bottom = field.t - (m + offset) * field.K / 2
    if bottom < 0:
        raise RenormError("bottom time before zero")
    applicable, propagated = [], []
    for tr in (ct.eta, ct.eta_tilde):
        app = tr.value_at(chain[-1], bottom) == 1
        prop = tr.value_at(chain[0], field.t) == 1
        if app and not prop:
            log.warning("transport failed: chain=%s offset=%d bottom=%.6g t=%.6g K=%.6g",
                        chain, offset, bottom, field.t, field.K)
        applicable.append(app)
        propagated.append(prop)
    return TransportResult(tuple(applicable), tuple(propagated), bottom)
