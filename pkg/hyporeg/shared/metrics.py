from __future__ import annotations

from dataclasses import dataclass
import math
from typing import Literal, Sequence

import numpy as np

from hyporeg.core.errors import InvariantError


ChoiceRule = Literal["power", "constant"]


@dataclass(frozen=True)
class LogLogFit:
    slope: float
    intercept: float
    residual: float
    points: int


def conjugate_exponent(q: float) -> float:
    """Hölder conjugate q/(q-1); q = ∞ gives 1."""
    if math.isinf(q):
        return 1.0
    if q <= 1:
        raise InvariantError(f"conjugate exponent needs q > 1, got {q}")
    return q / (q - 1.0)


def predicted_exponent(s: float, q: float) -> float:
    """Rate exponent (s-1)/q* of the H¹₀ error; 1 in the (2, ∞) case."""
    if s == 2.0 and math.isinf(q):
        return 1.0
    return (s - 1.0) / conjugate_exponent(q)


def power_rule_exponent(s: float, q: float) -> float:
    """α ∼ δ^{2(q*-s+1)/q*}."""
    q_star = conjugate_exponent(q)
    return 2.0 * (q_star - s + 1.0) / q_star


def parameter_choice(rule: ChoiceRule, delta: float, alpha0: float, exponent: float | None = None) -> float:
    if alpha0 <= 0:
        raise InvariantError(f"alpha0 must be > 0, got {alpha0}")
    if rule == "constant":
        return alpha0
    if rule != "power":
        raise InvariantError(f"unknown parameter choice rule {rule!r}")
    if exponent is None:
        raise InvariantError("power rule needs an exponent")
    if delta <= 0:
        raise InvariantError("power rule needs delta > 0")
    return alpha0 * delta**exponent


def fit_loglog(x: Sequence[float] | np.ndarray, y: Sequence[float] | np.ndarray) -> LogLogFit:
    """Least-squares line through (log x, log y); needs two positive points."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    keep = (x > 0) & (y > 0) & np.isfinite(x) & np.isfinite(y)
    x = x[keep]
    y = y[keep]
    if x.size < 2:
        return LogLogFit(slope=math.nan, intercept=math.nan, residual=math.nan, points=int(x.size))
    lx = np.log(x)
    ly = np.log(y)
    slope, intercept = np.polyfit(lx, ly, 1)
    residual = float(np.sqrt(np.mean((ly - (slope * lx + intercept)) ** 2)))
    return LogLogFit(slope=float(slope), intercept=float(intercept), residual=residual, points=int(x.size))


def non_increasing_with_slack(values: Sequence[float], slack: float = 0.2, atol: float = 0.0) -> bool:
    """Each value is at most (1 + slack) times the smallest value before it, plus atol."""
    running = math.inf
    for value in values:
        if value > (1.0 + slack) * running + atol:
            return False
        running = min(running, value)
    return True
