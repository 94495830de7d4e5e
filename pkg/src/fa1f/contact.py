"""Discrete-time contact process dominated by FA1f on a half-line.

Time is cut into blocks of length ``theta``.  On a half-line ``z_0, z_1, ...``
the process ``xi_n`` is built from the Harris marks of block ``n`` so that
``xi_n(j) = 1`` forces ``eta_{theta n}(z_j) = 1``:

* an occupied site stays occupied when it has no type-0 mark in the block;
* an empty site turns on when it has no type-0 mark and its first type-1
  mark comes before the first type-0 mark of some occupied neighbor.

The abstract process with parameters ``(p, p_hat)`` keeps an occupied site
with probability ``p`` and turns on an empty site with probability
``1 - (1 - p_hat)^k`` where ``k`` counts occupied neighbors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import Trajectory
from .engine import contact_batch, contact_step, evolve_batch, light_cone_radius
from .graph import GraphView, build_window
from .stats import binomial_se


class ContactError(ValueError):
    pass


@dataclass(frozen=True)
class ContactParams:
    p: float
    p_hat: float
    q: float | None = None
    theta: float | None = None

    def __post_init__(self):
        if not (0 < self.p <= 1 and 0 < self.p_hat <= 1):
            raise ContactError("p and p_hat must lie in (0, 1]")


@dataclass(frozen=True)
class DerivedParams:
    params: ContactParams
    p1: float
    p2: float
    p3: float
    p3_event: float


def p3_event_probability(q: float, theta: float) -> float:
    """Exact probability of the two-neighbor race event.

    No type-0 mark at ``z_j`` in the block, and its first type-1 mark
    precedes both the block end and the later of the two neighbors' first
    type-0 marks.
    """
    a = 1.0 - math.exp(-theta)
    b = -math.expm1(-theta * (2 - q)) / (2 - q)
    return q * math.exp(-theta * (1 - q)) * (2 * a - b)


def derive_params(q: float, theta: float) -> DerivedParams:
    """Coupling parameters from the block race events.

    ``p3`` is the closed form with prefactor ``exp(-2 theta (1 - q))``;
    :func:`p3_event_probability` gives the exact event probability, which
    is larger by ``exp(theta (1 - q))``.
    """
    if not 0 < q < 1:
        raise ContactError("q must lie in (0, 1)")
    if not theta > 0:
        raise ContactError("theta must be positive")
    one_minus_e = -math.expm1(-theta)
    p1 = math.exp(-theta * (1 - q))
    p2 = q * p1 * one_minus_e
    p3 = q * math.exp(-2 * theta * (1 - q)) * (2 * one_minus_e - (-math.expm1(-theta * (2 - q))) / (2 - q))
    p_hat = max(p2, 2 * p3 - p3**2)
    return DerivedParams(ContactParams(p1, p_hat, q, theta), p1, p2, p3, p3_event_probability(q, theta))


def _occupied_neighbors(xi: np.ndarray) -> np.ndarray:
    k = np.zeros_like(xi, dtype=np.int64)
    k[..., 1:] += xi[..., :-1]
    k[..., :-1] += xi[..., 1:]
    return k


def step_contact(xi: np.ndarray, params: ContactParams, rng: np.random.Generator) -> np.ndarray:
    """One step of the abstract kernel; ``xi`` may carry leading replica axes."""
    xi = np.asarray(xi, dtype=np.int8)
    k = _occupied_neighbors(xi)
    u = rng.random(xi.shape)
    on = np.where(xi == 1, u < params.p, u < 1.0 - (1.0 - params.p_hat) ** k)
    return on.astype(np.int8)


# ------------------------------------------------------------ coupling


@dataclass(frozen=True)
class CoupledContactRun:
    """``xi[n]`` and ``eta[n]`` (FA1f on the line at ``theta n``) for each step."""

    xi: np.ndarray
    eta: np.ndarray
    violations: int
    stay_trials: int
    stay_successes: int

    @property
    def dominated(self) -> bool:
        return self.violations == 0


def _check_line(g: GraphView, line) -> np.ndarray:
    line = np.asarray(line, dtype=np.int64)
    if line.ndim != 1 or line.size == 0:
        raise ContactError("line must be a nonempty site sequence")
    if np.unique(line).size != line.size:
        raise ContactError("line sites must be distinct")
    for a, b in zip(line[:-1].tolist(), line[1:].tolist()):
        if not g.is_adjacent(a, b):
            raise ContactError(f"line sites {a} and {b} are not adjacent")
    return line


def _first_marks(tr: Trajectory, line: np.ndarray, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
    t0, t1 = tr.scheme.type_times
    f0 = np.full(line.size, np.inf)
    f1 = np.full(line.size, np.inf)
    for j, z in enumerate(line.tolist()):
        for arr, out in ((t0[z], f0), (t1[z], f1)):
            k = np.searchsorted(arr, a, side="right")
            if k < arr.size and arr[k] <= b:
                out[j] = arr[k] - a
    return f0, f1


def coupled_contact(tr: Trajectory, theta: float, line, n_steps: int, xi0=None) -> CoupledContactRun:
    """Contact process read off the marks of ``tr`` block by block.

    ``xi0`` defaults to the restriction of ``eta_0`` to the line and must lie
    below it.  Each step records ``eta_{theta n}`` on the line and counts
    sites where ``xi`` exceeds it.
    """
    g = tr.scheme.graph
    line = _check_line(g, line)
    if theta * n_steps > tr.horizon * (1 + 1e-12):
        raise ContactError("theta * n_steps exceeds the horizon")
    eta0 = tr.initial[line]
    xi = eta0.copy() if xi0 is None else np.asarray(xi0, dtype=np.int8)
    if np.any(xi > eta0):
        raise ContactError("xi0 must lie below eta_0 on the line")
    xis = [xi]
    etas = [eta0]
    violations = trials = successes = 0
    for n in range(n_steps):
        a, b = theta * n, theta * (n + 1)
        f0, f1 = _first_marks(tr, line, a, b)
        new = contact_step(xi[None, :], f0[None, :], f1[None, :])[0]
        trials += int(xi.sum())
        successes += int(((xi == 1) & np.isinf(f0)).sum())
        eta_b = np.array([tr.value_at(z, b) for z in line.tolist()], dtype=np.int8)
        violations += int((new > eta_b).sum())
        xi = new
        xis.append(xi)
        etas.append(eta_b)
    return CoupledContactRun(np.array(xis), np.array(etas), violations, trials, successes)


@dataclass(frozen=True)
class DominationStats:
    replicas: int
    violations: int
    stay_frequency: float
    stay_se: float
    stay_target: float


def domination_experiment(q: float, theta: float, n_sites: int, n_steps: int, replicas: int,
                          rng: np.random.Generator, init: np.ndarray | None = None) -> DominationStats:
    """Batch coupled runs on a half-line window; all-occupied start by default."""
    g = build_window("half_line", n_sites - 1)
    if init is None:
        init = np.ones((replicas, g.n), dtype=np.int8)
    cb = contact_batch(g, q, init, np.arange(g.n), theta, n_steps, rng)
    freq = cb.stay_successes / cb.stay_trials if cb.stay_trials else math.nan
    se = float(binomial_se(freq, cb.stay_trials)) if cb.stay_trials else math.nan
    return DominationStats(replicas, int(cb.violations.sum()), freq, se, math.exp(-theta * (1 - q)))


# -------------------------------------------------------------- density


@dataclass(frozen=True)
class DensityResult:
    q: float
    L: float
    t: float
    rho: float
    replicas: int
    fail_prob: float
    se: float
    block_size: int
    alpha: float
    block_freq: np.ndarray
    window_sites: int

    def row(self) -> dict:
        return {"q": self.q, "L": self.L, "t": self.t, "rho": self.rho, "replicas": self.replicas,
                "fail_prob": self.fail_prob, "se": self.se}


def density_experiment(law: str, q: float, L: float, t: float, rho: float, block_size: int, alpha: float,
                       replicas: int, rng: np.random.Generator, eps: float = 1e-9, y: int = 0) -> DensityResult:
    """Probability that fewer than a ``rho`` fraction of ``z_0..z_{Lt-1}`` are occupied at ``t``.

    ``law`` is ``"delta"`` (one particle at ``z_y``) or ``"bernoulli"``
    (product Bernoulli(q) conditioned on the window being nonempty).  The
    half-line window extends a light-cone radius past the observed sites.
    Block stats give, per block of ``block_size`` consecutive observed
    sites, the frequency of at least ``alpha * size`` occupied sites.
    """
    if not 0 < q < 1:
        raise ContactError("q must lie in (0, 1)")
    if not 0 < L < (2 * q - 1) / 2:
        raise ContactError("need 0 < L < (2q - 1) / 2")
    if not 0 <= rho < 1 or not 0 < alpha < 1:
        raise ContactError("need rho in [0, 1) and alpha in (0, 1)")
    if block_size < 1:
        raise ContactError("block_size must be positive")
    n_obs = int(math.floor(L * t))
    if n_obs < 1:
        raise ContactError("L * t must be at least one site")
    if y < 0:
        raise ContactError("y must be a half-line index")
    g = build_window("half_line", max(n_obs, y + 1) + light_cone_radius(t, eps))
    if law == "delta":
        init = np.zeros((replicas, g.n), dtype=np.int8)
        init[:, y] = 1
    elif law == "bernoulli":
        init = (rng.random((replicas, g.n)) < q).astype(np.int8)
        empty = ~init.any(axis=1)
        while empty.any():
            init[empty] = (rng.random((int(empty.sum()), g.n)) < q).astype(np.int8)
            empty = ~init.any(axis=1)
    else:
        raise ContactError(f"unknown initial law {law!r}")
    run = evolve_batch(g, q, [init], [t], rng, observe=np.arange(n_obs))
    occ = run.snapshots[0, 0].astype(np.int64)
    fail = occ.sum(axis=1) <= rho * n_obs
    p = float(fail.mean())
    starts = np.arange(0, n_obs, block_size)
    sizes = np.minimum(starts + block_size, n_obs) - starts
    counts = np.add.reduceat(occ, starts, axis=1)
    block_freq = (counts >= alpha * sizes).mean(axis=0)
    return DensityResult(q, L, t, rho, replicas, p, float(binomial_se(p, replicas)), block_size, alpha,
                         block_freq, g.n)
