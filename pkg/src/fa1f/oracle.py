"""Exact analysis of the FA1f chain on tiny windows.

States are the nonzero configurations of the window, encoded as integers
whose bit ``x`` is the spin of site ``x``; state ``s`` sits at index
``s - 1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components
from scipy.stats import poisson

from .dynamics import CylinderEvent
from .graph import GraphView

MAX_ORACLE_SITES = 14


class OracleError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class FiniteChain:
    graph: GraphView
    q: float
    generator: sparse.csr_matrix

    @property
    def n_sites(self) -> int:
        return self.graph.n

    @property
    def n_states(self) -> int:
        return self.generator.shape[0]

    def configuration(self, index: int) -> np.ndarray:
        s = index + 1
        return np.array([(s >> x) & 1 for x in range(self.n_sites)], dtype=np.int8)

    def index_of(self, config) -> int:
        s = sum(int(v) << x for x, v in enumerate(config))
        if s == 0:
            raise OracleError("the all-zero configuration is not a state")
        return s - 1

    def configurations(self) -> np.ndarray:
        s = np.arange(1, self.n_states + 1)
        return ((s[:, None] >> np.arange(self.n_sites)) & 1).astype(np.int8)

    def event_indicator(self, e: CylinderEvent) -> np.ndarray:
        cfg = self.configurations()
        sub = cfg[:, list(e.base)]
        return np.array([tuple(row) in e.patterns for row in sub.tolist()], dtype=bool)

    def delta(self, y: int) -> np.ndarray:
        v = np.zeros(self.n_states)
        v[(1 << y) - 1] = 1.0
        return v


def build_chain(g: GraphView, q: float) -> FiniteChain:
    if g.n > MAX_ORACLE_SITES:
        raise OracleError(f"window of {g.n} sites exceeds the oracle cap of {MAX_ORACLE_SITES}")
    if not 0 < q < 1:
        raise OracleError("q must lie in (0, 1)")
    n = g.n
    n_states = 2**n - 1
    states = np.arange(1, n_states + 1)
    nbr_mask = np.array([sum(1 << y for y in g.adjacency[x]) for x in range(n)])
    rows, cols, vals = [], [], []
    for x in range(n):
        facilitated = (states & nbr_mask[x]) != 0
        src = states[facilitated]
        occupied = (src >> x) & 1
        dst = src ^ (1 << x)
        rows.append(src - 1)
        cols.append(dst - 1)
        vals.append(np.where(occupied == 1, 1.0 - q, q))
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)
    off = sparse.csr_matrix((vals, (rows, cols)), shape=(n_states, n_states))
    out = np.asarray(off.sum(axis=1)).ravel()
    gen = (off - sparse.diags(out)).tocsr()
    return FiniteChain(g, float(q), gen)


def transient_law(chain: FiniteChain, init: np.ndarray, t: float, tol: float = 1e-13) -> np.ndarray:
    """Law at time ``t`` by uniformization with total-variation error <= ``tol``."""
    if t < 0:
        raise OracleError("t must be nonnegative")
    if tol <= 0:
        raise OracleError("tol must be positive")
    init = np.asarray(init, dtype=float)
    if t == 0:
        return init.copy()
    Q = chain.generator
    lam = float(np.max(-Q.diagonal()))
    if lam == 0:
        return init.copy()
    P = (sparse.identity(chain.n_states, format="csr") + Q / lam).T.tocsr()
    mu = lam * t
    n_terms = int(poisson.isf(tol, mu)) + 1
    weights = poisson.pmf(np.arange(n_terms + 1), mu)
    v = init.copy()
    out = weights[0] * v
    for k in range(1, n_terms + 1):
        v = P @ v
        out += weights[k] * v
    return out


def stationary_law(chain: FiniteChain) -> np.ndarray:
    """Product Bernoulli(q) weights conditioned on the nonzero states."""
    n_comp, _ = connected_components(chain.generator, directed=True, connection="strong")
    if n_comp != 1:
        raise OracleError("chain is reducible; this contradicts a connected window")
    k = chain.configurations().sum(axis=1)
    w = chain.q**k * (1.0 - chain.q) ** (chain.n_sites - k)
    pi = w / w.sum()
    residual = np.abs(chain.generator.T @ pi).max()
    if residual > 1e-12:
        raise OracleError(f"global balance residual {residual:.3e}")
    return pi


def detailed_balance_residual(chain: FiniteChain) -> float:
    """Max over transitions of ``|pi(a) Q(a,b) - pi(b) Q(b,a)|`` with unnormalized product weights."""
    k = chain.configurations().sum(axis=1)
    w = chain.q**k * (1.0 - chain.q) ** (chain.n_sites - k)
    Q = chain.generator.tocoo()
    off = Q.row != Q.col
    a, b, rate = Q.row[off], Q.col[off], Q.data[off]
    back = np.asarray(chain.generator[b, a]).ravel()
    return float(np.max(np.abs(w[a] * rate - w[b] * back))) if a.size else 0.0


def _symmetrized(chain: FiniteChain) -> tuple[np.ndarray, np.ndarray]:
    pi = stationary_law(chain)
    d = np.sqrt(pi)
    S = (d[:, None] * chain.generator.toarray()) / d[None, :]
    return 0.5 * (S + S.T), d


def spectral_gap(chain: FiniteChain) -> float:
    """Smallest nonzero eigenvalue of ``-Q`` via the symmetrized generator."""
    return float(relaxation_spectrum(chain)[1])


def relaxation_spectrum(chain: FiniteChain) -> np.ndarray:
    S, _ = _symmetrized(chain)
    return np.sort(np.linalg.eigvalsh(-S))


def event_modes(chain: FiniteChain, y: int, e: CylinderEvent) -> tuple[np.ndarray, np.ndarray]:
    """Rates ``lam_k > 0`` and weights ``c_k`` with ``P^{delta_y}(e) - pi(e) = sum_k c_k exp(-lam_k t)``.

    Evaluating the difference mode by mode keeps full relative precision
    at times where it is far below machine epsilon in absolute terms.
    """
    S, d = _symmetrized(chain)
    lam, V = np.linalg.eigh(-S)
    ind = chain.event_indicator(e)
    i = int(np.argmax(chain.delta(y)))
    c = V[i, :] / d[i] * (V[ind, :] * d[ind, None]).sum(axis=0)
    keep = np.ones(lam.size, dtype=bool)
    keep[int(np.argmin(np.abs(lam)))] = False
    return lam[keep], c[keep]


@dataclass(frozen=True)
class DecayCurve:
    t: np.ndarray
    exact: np.ndarray
    stationary: float
    abs_diff: np.ndarray
    gap: float
    fit: "object | None"

    def rows(self):
        for t, p, d in zip(self.t, self.exact, self.abs_diff):
            yield {"t": float(t), "exact_prob": float(p), "stationary_prob": self.stationary, "abs_diff": float(d)}


def exact_decay(chain: FiniteChain, y: int, e: CylinderEvent, t_grid, tol: float = 1e-15,
                fit_from: float | None = None, method: str = "uniformization") -> DecayCurve:
    """Exact ``|P^{delta_y}(eta_t in e) - pi(e)|`` on a time grid.

    ``method="spectral"`` sums the eigenmodes of the reversible generator,
    which stays accurate once the difference drops below ``tol``.  The
    exponential fit uses grid points ``t >= fit_from`` (all points by
    default) with a positive difference.
    """
    from .stats import fit_exponential

    ind = chain.event_indicator(e)
    pi = stationary_law(chain)
    target = float(pi[ind].sum())
    t_grid = np.asarray(t_grid, dtype=float)
    if method == "uniformization":
        start = chain.delta(y)
        probs = np.array([transient_law(chain, start, t, tol)[ind].sum() for t in t_grid])
        diff = np.abs(probs - target)
    elif method == "spectral":
        lam, c = event_modes(chain, y, e)
        signed = np.exp(-np.outer(t_grid, lam)) @ c
        probs = target + signed
        diff = np.abs(signed)
    else:
        raise OracleError(f"unknown method {method!r}")
    use = diff > 0
    if fit_from is not None:
        use &= t_grid >= fit_from
    fit = fit_exponential(t_grid[use], diff[use]) if use.sum() >= 3 else None
    return DecayCurve(t_grid, probs, target, diff, spectral_gap(chain), fit)


def dense_transient(chain: FiniteChain, init: np.ndarray, t: float) -> np.ndarray:
    """Matrix-exponential reference for small windows."""
    from scipy.linalg import expm

    return np.asarray(init, dtype=float) @ expm(chain.generator.toarray() * t)
