"""Count-series collection and power-law exponent estimation.

Counts N(e^L) along a schedule of log-scale radii L are collected in one
multi-threshold traversal, then the growth exponent is fitted by ordinary
least squares on log N against log L, with sliding-window slopes as the
finite-size drift diagnostic.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .engine import OrbitSpec, traverse
from .errors import DegenerateRange, InsufficientSamples, InvalidSeries

DEFAULT_NODE_BUDGET = 20_000_000
DEFAULT_WINDOW = 5
# Baragar's published bracket for the growth exponent of the default variety
BARAGAR_BRACKET = (2.430, 2.477)


@dataclass
class CountSeries:
    samples: List[Tuple[float, int]]  # (L, N), L ascending, N nondecreasing
    spec_digest: str = ""

    def __post_init__(self):
        ls = [s[0] for s in self.samples]
        ns = [s[1] for s in self.samples]
        if any(b <= a for a, b in zip(ls, ls[1:])):
            raise InvalidSeries("L values must be strictly increasing")
        if any(b < a for a, b in zip(ns, ns[1:])):
            raise InvalidSeries("counts must be nondecreasing")
        if any(n < 1 for n in ns):
            raise InvalidSeries("every sample must contain at least the base point")

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("L,logL,N,logN\n")
        for l, n in self.samples:
            buf.write(f"{l!r},{math.log(l)!r},{n},{math.log(n)!r}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, spec_digest: str = "") -> "CountSeries":
        lines = [ln for ln in text.strip().splitlines() if ln.strip()]
        if not lines or not lines[0].startswith("L,"):
            raise InvalidSeries("missing 'L,logL,N,logN' header")
        samples = []
        for ln in lines[1:]:
            parts = ln.split(",")
            samples.append((float(parts[0]), int(parts[2])))
        return cls(samples, spec_digest)


@dataclass
class ExponentEstimate:
    beta: float
    log_c: float
    r_squared: float
    window_slopes: List[float]
    fit_range: Tuple[float, float]

    def to_json(self) -> dict:
        return {
            "formatVersion": 1,
            "beta": repr(self.beta),
            "logC": repr(self.log_c),
            "rSquared": repr(self.r_squared),
            "windowSlopes": [repr(s) for s in self.window_slopes],
            "fitRange": [repr(self.fit_range[0]), repr(self.fit_range[1])],
        }


def collect_series(spec: OrbitSpec, thresholds: Sequence[float], *,
                   threads: int = 1, depth_cap: Optional[int] = None) -> CountSeries:
    """One multi-threshold traversal; each node bumps every threshold above it."""
    thresholds = [float(t) for t in thresholds]
    if sorted(thresholds) != thresholds:
        raise ValueError("thresholds must be increasing")
    state = traverse(spec, thresholds, threads=threads, depth_cap=depth_cap)
    totals = state.totals()
    return CountSeries(list(zip(thresholds, totals)), spec.digest())


def plan_thresholds(spec: OrbitSpec, *, node_budget: int = DEFAULT_NODE_BUDGET,
                    num_points: int = 40, threads: int = 1,
                    beta_guess: float = 2.44) -> List[float]:
    """Log-spaced schedule from twice the base max-log up to the radius the
    node budget affords, sized from a cheap pilot count."""
    l_min = max(2.0 * spec.base_max_log, 1.0)
    pilot_l = max(8.0 * l_min, 50.0)
    pilot = traverse(spec, [pilot_l], threads=threads).totals()[0]
    c_hat = max(pilot / pilot_l ** beta_guess, 1e-9)
    l_max = (node_budget / c_hat) ** (1.0 / beta_guess)
    l_max = max(l_max, 2.0 * pilot_l)
    return list(np.geomspace(l_min, l_max, num_points))


def collect_series_budget(spec: OrbitSpec, *, node_budget: int = DEFAULT_NODE_BUDGET,
                          num_points: int = 40, threads: int = 1) -> CountSeries:
    thresholds = plan_thresholds(spec, node_budget=node_budget,
                                 num_points=num_points, threads=threads)
    return collect_series(spec, thresholds, threads=threads)


def fit_power_law(series: CountSeries, fit_range: Optional[Tuple[float, float]] = None,
                  window: int = DEFAULT_WINDOW) -> ExponentEstimate:
    """OLS of log N on log L over ``fit_range``; window slopes over the whole series."""
    ls = np.array([s[0] for s in series.samples])
    ns = np.array([s[1] for s in series.samples], dtype=float)
    if fit_range is None:
        fit_range = (float(ls[0]), float(ls[-1]))
    mask = (ls >= fit_range[0]) & (ls <= fit_range[1])
    if int(mask.sum()) < 3:
        raise InsufficientSamples(f"only {int(mask.sum())} samples in fit range")
    x = np.log(ls[mask])
    y = np.log(ns[mask])
    if np.ptp(x) == 0:
        raise DegenerateRange("all L in the fit range are equal")
    beta, log_c = np.polyfit(x, y, 1)
    resid = y - (beta * x + log_c)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float((resid ** 2).sum()) / ss_tot if ss_tot > 0 else 1.0

    xs_all = np.log(ls)
    ys_all = np.log(ns)
    slopes = []
    for i in range(len(ls) - window + 1):
        xw = xs_all[i: i + window]
        yw = ys_all[i: i + window]
        if np.ptp(xw) == 0:
            raise DegenerateRange("degenerate sliding window")
        slopes.append(float(np.polyfit(xw, yw, 1)[0]))
    return ExponentEstimate(beta=float(beta), log_c=float(log_c), r_squared=r2,
                            window_slopes=slopes, fit_range=fit_range)


def bracket_check(est: ExponentEstimate, lo: float = BARAGAR_BRACKET[0],
                  hi: float = BARAGAR_BRACKET[1]) -> Tuple[str, float]:
    """Classify the fitted exponent against [lo, hi]; margin to nearer endpoint."""
    if not lo < hi:
        raise ValueError("need lo < hi")
    if est.beta < lo:
        return "Below", lo - est.beta
    if est.beta > hi:
        return "Above", est.beta - hi
    return "Inside", min(est.beta - lo, hi - est.beta)
