"""Experiment configuration read from ``key = value`` INI files.

A config has an ``[experiment]`` section and optional ``[graph]`` and
``[output]`` sections::

    [experiment]
    kind = oracle-decay
    q = 0.5
    t_grid = 0.5, 1, 2, 4
    seed = 7

    [graph]
    kind = path
    radius = 1

Parameters irrelevant to the chosen kind are ignored; the relevant ones are
checked by :meth:`ExperimentConfig.validate` before anything runs.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, fields, replace
from pathlib import Path

KINDS = ("sample-scheme", "evolve", "couple", "dual-audit", "navigate-stats", "contact-density",
         "renorm-tails", "oracle-decay", "encounter-census", "assembly", "fit")

GRAPH_KINDS = ("path", "half_line", "grid2d", "regular_tree")


class ConfigError(ValueError):
    pass


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.replace(";", ",").split(",") if v.strip())


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.replace(";", ",").split(",") if v.strip())


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    graph_kind: str = "path"
    radius: int = 1
    degree: int = 3
    q: float | None = None
    K: float | None = None
    t_grid: tuple[float, ...] = ()
    replicas: int = 1000
    seed: int = 0
    sigma: float = 0.1
    R: float = 0.2
    L: float | None = None
    rho: float = 0.5
    theta: float = 1.0
    alpha: float = 0.5
    block_size: int = 10
    x: int = 0
    y: int = 0
    tau: float = 0.0
    d: tuple[int, ...] = (1,)
    law1: str = "delta"
    law2: str = "bernoulli"
    n_max: int = 8
    budget: float | None = None
    input: str | None = None
    out_dir: str = "out"
    threads: int | None = None

    @property
    def horizon(self) -> float:
        return max(self.t_grid) if self.t_grid else 0.0

    def with_overrides(self, **kw) -> "ExperimentConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw)

    def validate(self) -> "ExperimentConfig":
        k = self.kind
        if k not in KINDS:
            raise ConfigError(f"unknown experiment kind {k!r}")
        if self.graph_kind not in GRAPH_KINDS:
            raise ConfigError(f"unknown graph kind {self.graph_kind!r}")
        if self.radius < 1:
            raise ConfigError("radius must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.replicas < 1:
            raise ConfigError("replicas must be positive")
        if self.threads is not None and self.threads < 1:
            raise ConfigError("threads must be positive")
        if self.budget is not None and not self.budget > 0:
            raise ConfigError("budget must be positive seconds")
        needs_q = k not in ("renorm-tails", "encounter-census", "fit")
        if needs_q and (self.q is None or not 0 < self.q < 1):
            raise ConfigError("q must lie in (0, 1)")
        if k in ("renorm-tails", "encounter-census") and (self.K is None or self.K < 1):
            raise ConfigError("K must be at least 1")
        if k not in ("renorm-tails", "navigate-stats", "fit"):
            if not self.t_grid:
                raise ConfigError("t_grid must be nonempty")
        if any(not (math.isfinite(t) and t >= 0) for t in self.t_grid):
            raise ConfigError("t_grid entries must be finite and nonnegative")
        if k in ("assembly", "encounter-census") and not 0 < self.sigma < 0.25:
            raise ConfigError("sigma must lie in (0, 1/4)")
        if k == "contact-density":
            if self.L is None or not 0 < self.L < (2 * self.q - 1) / 2:
                raise ConfigError("need 0 < L < (2q - 1) / 2")
            if not 0 <= self.rho < 1 or not 0 < self.alpha < 1 or self.block_size < 1:
                raise ConfigError("need rho in [0, 1), alpha in (0, 1), block_size >= 1")
            if self.law1 not in ("delta", "bernoulli"):
                raise ConfigError("contact-density law1 must be delta or bernoulli")
        if k == "navigate-stats":
            if not self.q > 0.5:
                raise ConfigError("navigate-stats needs q > 1/2")
            if not self.d or min(self.d) < 0:
                raise ConfigError("d must list nonnegative distances")
        if k == "couple" or k == "assembly":
            for law in (self.law1, self.law2):
                if law not in ("delta", "bernoulli"):
                    raise ConfigError(f"unknown initial law {law!r}")
        if k == "dual-audit" and not 0 <= self.tau < self.horizon:
            raise ConfigError("dual-audit needs 0 <= tau < max(t_grid)")
        if not 0 < self.R < 1:
            raise ConfigError("R must lie in (0, 1)")
        if k == "encounter-census" and self.graph_kind not in ("path", "half_line"):
            raise ConfigError("encounter-census runs on a path window")
        if k == "renorm-tails" and self.n_max < 1:
            raise ConfigError("n_max must be positive")
        if k == "fit" and not self.input:
            raise ConfigError("fit needs an input CSV")
        return self


_CASTS = {
    "radius": int, "degree": int, "q": float, "K": float, "t_grid": _floats, "replicas": int, "seed": int,
    "sigma": float, "R": float, "L": float, "rho": float, "theta": float, "alpha": float,
    "block_size": int, "x": int, "y": int, "tau": float, "d": _ints, "law1": str, "law2": str,
    "n_max": int, "budget": float, "input": str, "threads": int,
}


def parse_config(text: str, base_dir: Path | None = None) -> ExperimentConfig:
    cp = configparser.ConfigParser()
    cp.optionxform = str  # keep "K" and "R" case
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"unreadable config: {exc}") from exc
    if "experiment" not in cp:
        raise ConfigError("missing [experiment] section")
    exp = dict(cp["experiment"])
    if "kind" not in exp:
        raise ConfigError("[experiment] needs a kind")
    kw: dict = {"kind": exp.pop("kind").strip()}
    if "graph" in cp:
        g = dict(cp["graph"])
        if "kind" in g:
            kw["graph_kind"] = g.pop("kind").strip()
        for key in ("radius", "degree"):
            if key in g:
                exp.setdefault(key, g.pop(key))
        if g:
            raise ConfigError(f"unknown [graph] keys: {', '.join(sorted(g))}")
    if "output" in cp and "dir" in cp["output"]:
        kw["out_dir"] = cp["output"]["dir"]
    extra = {}
    names = {f.name for f in fields(ExperimentConfig)}
    for key, raw in exp.items():
        if key in _CASTS and key in names:
            try:
                kw[key] = _CASTS[key](raw.strip())
            except ValueError as exc:
                raise ConfigError(f"bad value for {key}: {raw!r}") from exc
        else:
            extra[key] = raw
    if extra:
        raise ConfigError(f"unknown keys: {', '.join(sorted(extra))}")
    if "input" in kw and base_dir is not None and not Path(kw["input"]).is_absolute():
        kw["input"] = str(base_dir / kw["input"])
    return ExperimentConfig(**kw)


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, path.parent)
