"""Standard errors and exponential-rate fitting."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SE_TOLERANCE = 3.0


def binomial_se(p_hat, n):
    """Normal-approximation standard error of a binomial proportion."""
    p_hat = np.asarray(p_hat, dtype=float)
    return np.sqrt(np.clip(p_hat * (1.0 - p_hat), 0.0, None) / n)


def weighted_mean_se(values: np.ndarray) -> tuple[float, float]:
    """Sample mean and its standard error."""
    values = np.asarray(values, dtype=float)
    n = values.size
    if n < 2:
        return float(values.mean()) if n else math.nan, math.inf
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(n))


def within(estimate: float, target: float, se: float, k: float = SE_TOLERANCE) -> bool:
    return abs(estimate - target) <= k * se


class FitError(ValueError):
    pass


@dataclass(frozen=True)
class FitResult:
    """``p(t) ~ prefactor * exp(-rate * t)``."""

    rate: float
    prefactor: float
    r2: float
    rate_se: float
    n_points: int
    se: tuple[float, ...] = ()

    def predict(self, t):
        return self.prefactor * np.exp(-self.rate * np.asarray(t, dtype=float))

    def as_dict(self) -> dict:
        return {"rate": self.rate, "prefactor": self.prefactor, "r2": self.r2,
                "rate_se": self.rate_se, "n_points": self.n_points, "se": list(self.se)}


def fit_exponential(t, p, se=None) -> FitResult:
    """Weighted least squares of ``log p`` against ``t``.

    Weights are ``(p / se)**2``, the inverse delta-method variance of
    ``log p``; without usable standard errors the fit is unweighted.
    """
    t = np.asarray(t, dtype=float)
    p = np.asarray(p, dtype=float)
    if t.size < 3:
        raise FitError("need at least 3 points")
    if np.any(p <= 0):
        raise FitError("nonpositive estimate in series; increase the number of replicas")
    y = np.log(p)
    if se is not None and np.all(np.asarray(se, dtype=float) > 0):
        se = np.asarray(se, dtype=float)
        w = (p / se) ** 2
    else:
        se = np.zeros_like(p) if se is None else np.asarray(se, dtype=float)
        w = np.ones_like(p)
    W = w.sum()
    tb = (w * t).sum() / W
    yb = (w * y).sum() / W
    stt = (w * (t - tb) ** 2).sum()
    if stt == 0:
        raise FitError("all points share one time")
    slope = (w * (t - tb) * (y - yb)).sum() / stt
    icpt = yb - slope * tb
    resid = y - (icpt + slope * t)
    ss_res = (w * resid**2).sum()
    ss_tot = (w * (y - yb) ** 2).sum()
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    if np.all(w == 1.0):
        dof = max(t.size - 2, 1)
        slope_se = math.sqrt(ss_res / dof / stt)
    else:
        slope_se = math.sqrt(1.0 / stt)
    return FitResult(rate=float(-slope), prefactor=float(math.exp(icpt)), r2=float(r2),
                     rate_se=float(slope_se), n_points=int(t.size), se=tuple(float(s) for s in se))
