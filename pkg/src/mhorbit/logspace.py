"""Log-coordinate point arithmetic with a tracked error bound.

Coordinates are stored as natural logs at a configurable mantissa precision
(mpmath), together with a scalar bound on the absolute error of each stored
log.  Two move kernels are provided: a subtraction form for outgoing moves
(result dominates) and a Vieta-quotient form for descending moves (result
suffers catastrophic cancellation in the subtraction form).  They compute
algebraically identical values.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence, Tuple

import mpmath as mp

from .errors import DimensionMismatch, ErrorBudgetExceeded, NotOutgoing
from .variety import ExactPoint, VarietyParams

# slack factor applied on top of first-order rounding estimates
KAPPA = 8.0


@dataclass(frozen=True)
class PrecisionConfig:
    """Mantissa precision for log arithmetic plus the error budget."""

    working_bits: int = 128
    max_err: float = 1e-6

    def __post_init__(self):
        if self.working_bits < 53:
            raise ValueError("working_bits must be >= 53")
        if self.max_err <= 0:
            raise ValueError("max_err must be > 0")

    @property
    def eps(self) -> float:
        return 2.0 ** (1 - self.working_bits)


DEFAULT_PRECISION = PrecisionConfig()


class Verdict(enum.Enum):
    BELOW = "Below"
    ABOVE = "Above"
    INDETERMINATE = "Indeterminate"


@dataclass(frozen=True)
class LogPoint:
    """Logs of the coordinates of an orbit point, with an error bound.

    ``err_bound`` bounds the absolute error of every stored log and never
    decreases under moves.
    """

    logs: Tuple[mp.mpf, ...]
    err_bound: float
    bits: int

    @classmethod
    def from_coords(cls, coords: Sequence, cfg: PrecisionConfig = DEFAULT_PRECISION) -> "LogPoint":
        with mp.workprec(cfg.working_bits):
            logs = tuple(mp.log(mp.mpf(c.numerator) / c.denominator)
                         if hasattr(c, "denominator") and c.denominator != 1
                         else mp.log(mp.mpf(c))
                         for c in coords)
        err = max(cfg.eps * max(abs(float(x)), 1.0) for x in logs)
        return cls(logs, err, cfg.working_bits)

    @property
    def max_log(self) -> float:
        return max(float(x) for x in self.logs)

    def float_logs(self):
        return tuple(float(x) for x in self.logs)


def to_log_point(p: ExactPoint, cfg: PrecisionConfig = DEFAULT_PRECISION) -> LogPoint:
    return LogPoint.from_coords(p.coords, cfg)


def _ulp(cfg: PrecisionConfig, value) -> float:
    return KAPPA * cfg.eps * max(abs(float(value)), 1.0)


def _check_dim(params: VarietyParams, lp: LogPoint):
    if len(lp.logs) != params.n:
        raise DimensionMismatch(f"expected {params.n} logs, got {len(lp.logs)}")


def log_move_outgoing(params: VarietyParams, lp: LogPoint, j: int,
                      cfg: PrecisionConfig = DEFAULT_PRECISION) -> LogPoint:
    """Move at a non-(uniquely largest) coordinate, subtraction form.

    new log_j = S + log1p(-exp(log_j - S)) with S = log a + sum of the other
    logs.  Requires exp(log_j - S) < 1, which holds whenever the move output
    is positive; raises NotOutgoing when the precondition fails within the
    error bound.
    """
    _check_dim(params, lp)
    others = [lp.logs[i] for i in range(params.n) if i != j - 1]
    if float(lp.logs[j - 1]) - lp.err_bound > max(float(x) for x in others) + lp.err_bound:
        raise NotOutgoing(f"coordinate {j} is the certified unique maximum")
    with mp.workprec(cfg.working_bits):
        loga = mp.log(mp.mpf(params.a.numerator) / params.a.denominator)
        s = loga + mp.fsum(others)
        r = mp.e ** (lp.logs[j - 1] - s)
        if r >= 1:
            raise NotOutgoing(f"move {j} output not positive-dominant (r={float(r)})")
        new = s + mp.log1p(-r)
    rf = min(float(r), 0.5)
    e_new = (3.0 * lp.err_bound + rf * lp.err_bound) / (1.0 - rf) + _ulp(cfg, new)
    err = max(lp.err_bound, e_new)
    if err > cfg.max_err:
        raise ErrorBudgetExceeded(f"err bound {err} exceeds budget {cfg.max_err}")
    logs = lp.logs[: j - 1] + (new,) + lp.logs[j:]
    return LogPoint(logs, err, cfg.working_bits)


def log_move_descent(params: VarietyParams, lp: LogPoint, j: int,
                     cfg: PrecisionConfig = DEFAULT_PRECISION) -> LogPoint:
    """Move at the maximal coordinate, Vieta-quotient form.

    new log_j = logsumexp(2*log_i, i != j) - log_j; stable when the result is
    much smaller than the product term.
    """
    _check_dim(params, lp)
    with mp.workprec(cfg.working_bits):
        terms = [2 * lp.logs[i] for i in range(params.n) if i != j - 1]
        m = max(terms)
        new = m + mp.log(mp.fsum(mp.e ** (t - m) for t in terms)) - lp.logs[j - 1]
    e_new = 3.0 * lp.err_bound + _ulp(cfg, new)
    err = max(lp.err_bound, e_new)
    if err > cfg.max_err:
        raise ErrorBudgetExceeded(f"err bound {err} exceeds budget {cfg.max_err}")
    logs = lp.logs[: j - 1] + (new,) + lp.logs[j:]
    return LogPoint(logs, err, cfg.working_bits)


def certified_compare(lp: LogPoint, threshold: float) -> Verdict:
    """Compare max log against a log-scale threshold, honoring the error bound.

    The comparison runs at the point's working precision; rounding the stored
    logs to float64 first would exceed the tracked bound.
    """
    with mp.workprec(lp.bits):
        m = max(lp.logs)
        t = mp.mpf(threshold)
        if m + lp.err_bound <= t:
            return Verdict.BELOW
        if m - lp.err_bound > t:
            return Verdict.ABOVE
    return Verdict.INDETERMINATE


# --- serialization -----------------------------------------------------------

def log_point_to_json(lp: LogPoint) -> dict:
    with mp.workprec(lp.bits):
        logs = [mp.nstr(x, int(lp.bits * 0.302) + 3) for x in lp.logs]
    return {"logs": logs, "errBound": repr(lp.err_bound), "bits": lp.bits}


def log_point_from_json(obj: dict) -> LogPoint:
    bits = int(obj["bits"])
    with mp.workprec(bits):
        logs = tuple(mp.mpf(s) for s in obj["logs"])
    return LogPoint(logs, float(obj["errBound"]), bits)


def float_log(value) -> float:
    """Natural log of an arbitrary-precision positive rational, as a float."""
    if hasattr(value, "denominator") and value.denominator != 1:
        return math.log(value.numerator) - math.log(value.denominator)
    v = int(value) if not isinstance(value, float) else value
    if isinstance(v, int) and v.bit_length() > 900:
        # avoid float overflow for huge integers
        return math.log2(v) * math.log(2.0)
    return math.log(v)
