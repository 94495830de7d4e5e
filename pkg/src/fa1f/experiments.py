"""Experiment runners behind the command-line subcommands.

Each runner maps a validated :class:`ExperimentConfig` to a :class:`Report`
holding CSV tables, JSON summaries and plain-text dumps.  Reports depend
only on the config and its seed; wall-clock measurements are kept out of
them so reruns are byte-identical.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .census import assembly_experiment, census_trend
from .config import ConfigError, ExperimentConfig
from .contact import density_experiment
from .dual import audit_activation, find_non_activated_path, long_path_census
from .dynamics import BernoulliConditioned, CylinderEvent, Delta, config_string, couple, evolve, sample_initial
from .graph import GraphView, build_window
from .harris import sample_scheme
from .navigated import hitting_stats
from .oracle import build_chain, exact_decay
from .renorm import death_tail, sample_good_field, subordinate_chain
from .stats import fit_exponential


@dataclass
class Table:
    header: list[str]
    rows: list[list] = field(default_factory=list)


@dataclass
class Report:
    tables: dict[str, Table] = field(default_factory=dict)
    summaries: dict[str, dict] = field(default_factory=dict)
    json_lines: dict[str, list[dict]] = field(default_factory=dict)
    texts: dict[str, str] = field(default_factory=dict)


def _graph(cfg: ExperimentConfig) -> GraphView:
    return build_window(cfg.graph_kind, cfg.radius, degree=cfg.degree)


def _law(name: str, cfg: ExperimentConfig):
    if name == "delta":
        return Delta(cfg.y)
    if name == "bernoulli":
        return BernoulliConditioned(cfg.q)
    raise ConfigError(f"unknown initial law {name!r}")


def _params(cfg: ExperimentConfig, *names) -> dict:
    out = {"kind": cfg.kind, "seed": cfg.seed, "replicas": cfg.replicas}
    for n in names:
        v = getattr(cfg, n)
        out[n] = list(v) if isinstance(v, tuple) else v
    return out


def _fit_dict(fit) -> dict | None:
    return None if fit is None else fit.as_dict()


def _seeds(cfg: ExperimentConfig, count: int) -> list[int]:
    rng = np.random.default_rng(cfg.seed)
    return rng.integers(0, 2**63 - 1, count, dtype=np.int64).tolist()


# ---------------------------------------------------------------- runners


def run_sample_scheme(cfg: ExperimentConfig) -> Report:
    g = _graph(cfg)
    s = sample_scheme(g, cfg.horizon, cfg.q, cfg.seed)
    times, sites, gammas = s.events
    ones = int(gammas.sum())
    summary = _params(cfg, "graph_kind", "radius", "q", "t_grid")
    summary.update({"n_sites": g.n, "n_marks": int(times.size), "type1": ones, "type0": int(times.size) - ones,
                    "rate_estimate": times.size / (g.n * cfg.horizon) if cfg.horizon > 0 else math.nan})
    return Report(summaries={"summary": summary}, texts={"scheme.txt": s.dump()})


def run_evolve(cfg: ExperimentConfig) -> Report:
    g = _graph(cfg)
    s = sample_scheme(g, cfg.horizon, cfg.q, cfg.seed)
    tr = evolve(sample_initial(_law(cfg.law1, cfg), g, cfg.seed), s)
    tab = Table(["t", "config", "density"])
    for t in cfg.t_grid:
        c = tr.state_at(t)
        tab.rows.append([t, config_string(c), float(c.mean())])
    summary = _params(cfg, "graph_kind", "radius", "q", "t_grid", "law1", "y")
    summary["n_flips"] = int(tr.flip_times.size)
    return Report({"snapshots": tab}, {"summary": summary}, texts={"trajectory.txt": tr.dump()})


def run_couple(cfg: ExperimentConfig) -> Report:
    g = _graph(cfg)
    g.check_site(cfg.x)
    s = sample_scheme(g, cfg.horizon, cfg.q, cfg.seed)
    ct = couple(_law(cfg.law1, cfg), _law(cfg.law2, cfg), s, cfg.seed, cfg.seed ^ 0x5EED)
    tab = Table(["t", "eta", "eta_tilde", "x_activated", "agree_fraction"])
    for t in cfg.t_grid:
        a, b = ct.eta.state_at(t), ct.eta_tilde.state_at(t)
        tab.rows.append([t, config_string(a), config_string(b), int(a[cfg.x] == b[cfg.x]), float((a == b).mean())])
    return Report({"coupled": tab}, {"summary": _params(cfg, "graph_kind", "radius", "q", "t_grid", "law1",
                                                          "law2", "x", "y")})


def run_dual_audit(cfg: ExperimentConfig) -> Report:
    """Dual-path audits on independent coupled runs at ``t = max(t_grid)``."""
    g = _graph(cfg)
    g.check_site(cfg.x)
    t, tau = cfg.horizon, cfg.tau
    tab = Table(["seed", "t", "tau", "n_paths", "max_value", "truncated"])
    violations = non_activated = witnesses = 0
    for seed in _seeds(cfg, cfg.replicas):
        s = sample_scheme(g, t, cfg.q, seed)
        ct = couple(_law(cfg.law1, cfg), _law(cfg.law2, cfg), s, seed, seed ^ 0x5EED)
        census = long_path_census(s, cfg.x, t, tau, 1.0)
        tab.rows.append([seed, t, tau, census.n_paths, census.max_value, int(census.truncated)])
        audit = audit_activation(ct, cfg.x, t, tau)
        violations += audit.violation
        if not audit.t_activated:
            non_activated += 1
            p = find_non_activated_path(ct, cfg.x, t, tau)
            if p is not None:
                p.validate(s)
                witnesses += 1
    summary = _params(cfg, "graph_kind", "radius", "q", "x", "tau", "law1", "law2")
    summary.update({"t": t, "violations": violations, "non_activated": non_activated,
                    "witnesses_found": witnesses})
    return Report({"census": tab}, {"summary": summary})


def run_navigate_stats(cfg: ExperimentConfig) -> Report:
    rng = np.random.default_rng(cfg.seed)
    tab = Table(["q", "d", "replicas", "mean", "se", "bound"])
    extra = []
    for d in cfg.d:
        h = hitting_stats(cfg.q, d, cfg.replicas, rng=rng)
        r = h.row()
        tab.rows.append([r[k] for k in tab.header])
        extra.append({"d": d, "censored": h.censored, "down_fraction": h.down_fraction,
                      "down_fraction_se": h.down_fraction_se, "failures": h.failures})
    summary = _params(cfg, "q", "d")
    summary["details"] = extra
    return Report({"stats": tab}, {"summary": summary})


def run_contact_density(cfg: ExperimentConfig) -> Report:
    rng = np.random.default_rng(cfg.seed)
    tab = Table(["q", "L", "t", "rho", "replicas", "fail_prob", "se"])
    blocks = []
    for t in cfg.t_grid:
        res = density_experiment(cfg.law1, cfg.q, cfg.L, t, cfg.rho, cfg.block_size, cfg.alpha, cfg.replicas, rng,
                                 y=cfg.y)
        r = res.row()
        tab.rows.append([r[k] for k in tab.header])
        blocks.append({"t": t, "window_sites": res.window_sites, "block_freq": res.block_freq.tolist()})
    summary = _params(cfg, "q", "L", "rho", "alpha", "block_size", "law1", "y", "t_grid")
    summary["blocks"] = blocks
    return Report({"density": tab}, {"summary": summary})


def run_renorm_tails(cfg: ExperimentConfig) -> Report:
    rng = np.random.default_rng(cfg.seed)
    dt = death_tail(cfg.K, cfg.replicas, cfg.n_max, rng)
    tab = Table(["K", "n", "p_hat", "se", "bound"])
    for r in dt.rows():
        tab.rows.append([r[k] for k in tab.header])
    n_sites = 4 * cfg.n_max + 8
    fld = sample_good_field(range(n_sites), 8 * cfg.n_max + 16, cfg.K, rng)
    chain = subordinate_chain(fld, range(n_sites), 0, budget=64, max_steps=cfg.n_max)
    summary = _params(cfg, "K", "n_max")
    summary.update({"n_cap": dt.n_cap, "extinction": dt.extinction, "extinction_se": dt.extinction_se,
                    "fit": _fit_dict(dt.fit), "chain_survived": chain.survived,
                    "chain_budget_exhausted": chain.budget_exhausted})
    return Report({"tails": tab}, {"summary": summary}, {"chain": chain.to_json_lines()})


def run_oracle_decay(cfg: ExperimentConfig) -> Report:
    g = _graph(cfg)
    g.check_site(cfg.x)
    g.check_site(cfg.y)
    chain = build_chain(g, cfg.q)
    curve = exact_decay(chain, cfg.y, CylinderEvent.occupied(cfg.x), cfg.t_grid)
    tab = Table(["t", "exact_prob", "stationary_prob", "abs_diff"])
    for t, p, d in zip(curve.t, curve.exact, curve.abs_diff):
        tab.rows.append([float(t), float(p), float(curve.stationary), float(d)])
    summary = _params(cfg, "graph_kind", "radius", "q", "x", "y", "t_grid")
    summary.update({"gap": curve.gap, "fit": _fit_dict(curve.fit),
                    "fitted_rate": None if curve.fit is None else curve.fit.rate})
    return Report({"curve": tab}, {"summary": summary})


def run_encounter_census(cfg: ExperimentConfig) -> Report:
    n_sites = cfg.radius + 1
    tr = census_trend(cfg.K, cfg.t_grid, cfg.sigma, cfg.replicas, cfg.seed, n_sites=n_sites)
    tab = Table(["t", "p_avoid", "se"])
    for t, p, s in zip(tr.t, tr.p_avoid, tr.se):
        tab.rows.append([float(t), float(p), float(s)])
    summary = _params(cfg, "K", "sigma", "R", "t_grid")
    summary["n_sites"] = n_sites
    return Report({"census": tab}, {"summary": summary})


def run_assembly(cfg: ExperimentConfig) -> Report:
    g = _graph(cfg)
    rng = np.random.default_rng(cfg.seed)
    budget = None
    if cfg.budget is not None:
        deadline = time.monotonic() + cfg.budget
        budget = lambda: time.monotonic() > deadline  # noqa: E731
    res = assembly_experiment(g, cfg.y, cfg.x, cfg.q, cfg.t_grid, cfg.sigma, cfg.replicas, rng,
                              _law(cfg.law1, cfg), _law(cfg.law2, cfg), budget=budget)
    tab = Table(["t", "p_hat", "se"])
    for r in res.rows():
        tab.rows.append([r["t"], r["p_hat"], r["se"]])
    summary = _params(cfg, "graph_kind", "radius", "q", "x", "y", "sigma", "R", "t_grid", "law1", "law2",
                      "budget")
    summary.update({
        "replicas_done": res.replicas, "truncated": res.truncated, "estimates": res.p_hat.tolist(),
        "se": res.se.tolist(), "fit": _fit_dict(res.fit), "strictly_decreasing": res.strictly_decreasing(),
        "initial_mismatch": res.initial_mismatch,
        "margins": {"light_cone": res.margin.light_cone, "distance_to_boundary": res.margin.distance_to_boundary,
                    "ok": res.margin.ok},
    })
    return Report({"assembly": tab}, {"summary": summary})


def read_series(path: str) -> tuple[np.ndarray, np.ndarray, np.ndarray | None]:
    """``t``, estimate and optional SE columns from a CSV with a header row."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ConfigError(f"{path} has no data rows")
    cols = rows[0].keys()
    pcol = next((c for c in ("p_hat", "p", "abs_diff", "fail_prob", "p_avoid") if c in cols), None)
    if "t" not in cols or pcol is None:
        raise ConfigError(f"{path} needs a t column and an estimate column")
    t = np.array([float(r["t"]) for r in rows])
    p = np.array([float(r[pcol]) for r in rows])
    se = np.array([float(r["se"]) for r in rows]) if "se" in cols else None
    return t, p, se


def run_fit(cfg: ExperimentConfig) -> Report:
    t, p, se = read_series(cfg.input)
    fit = fit_exponential(t, p, se)
    summary = {"kind": cfg.kind, "input": cfg.input, "fit": fit.as_dict()}
    return Report(summaries={"fit": summary})


RUNNERS = {
    "sample-scheme": run_sample_scheme,
    "evolve": run_evolve,
    "couple": run_couple,
    "dual-audit": run_dual_audit,
    "navigate-stats": run_navigate_stats,
    "contact-density": run_contact_density,
    "renorm-tails": run_renorm_tails,
    "oracle-decay": run_oracle_decay,
    "encounter-census": run_encounter_census,
    "assembly": run_assembly,
    "fit": run_fit,
}


def run(cfg: ExperimentConfig) -> Report:
    cfg.validate()
    return RUNNERS[cfg.kind](cfg)


__all__ = ["Report", "Table", "RUNNERS", "run", "read_series"]
