"""Welch's unequal-variance t-test with an analytic p-value.

The two-sided p-value comes from the regularized incomplete beta function,
evaluated with the standard continued-fraction expansion (modified Lentz),
so no lookup tables and no rounding of the degrees of freedom.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

_MAX_ITER = 300
_CF_EPS = 3e-16
_FPMIN = 1e-300


class StatisticsError(ValueError):
    """Raised for degenerate inputs (tiny samples, zero pooled variance)."""


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta function (modified Lentz)."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _FPMIN:
        d = _FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise StatisticsError(f"incomplete beta failed to converge for a={a}, b={b}, x={x}")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if a <= 0 or b <= 0:
        raise StatisticsError("beta parameters must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                + a * math.log(x) + b * math.log(1.0 - x))
    front = math.exp(ln_front)
    # Use the expansion on whichever side converges fast.
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


@dataclass(frozen=True)
class TTestResult:
    t: float
    df: float
    p: float


def _mean_var(sample) -> tuple[float, float, int]:
    n = len(sample)
    mean = math.fsum(sample) / n
    var = math.fsum((v - mean) ** 2 for v in sample) / (n - 1)
    return mean, var, n


def welch_ttest(sample_a, sample_b) -> TTestResult:
    """Two-sided Welch test: statistic, Welch-Satterthwaite df, analytic p."""
    if len(sample_a) < 2 or len(sample_b) < 2:
        raise StatisticsError("each sample needs at least 2 values")
    mean_a, var_a, n_a = _mean_var(sample_a)
    mean_b, var_b, n_b = _mean_var(sample_b)
    se_a = var_a / n_a
    se_b = var_b / n_b
    se2 = se_a + se_b
    if se2 <= 0.0:
        if mean_a == mean_b:
            # Identical constant samples: no separation by definition.
            return TTestResult(t=0.0, df=float(n_a + n_b - 2), p=1.0)
        raise StatisticsError("zero pooled variance")
    t = (mean_a - mean_b) / math.sqrt(se2)
    df = se2 ** 2 / (se_a ** 2 / (n_a - 1) + se_b ** 2 / (n_b - 1))
    p = regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t))
    return TTestResult(t=t, df=df, p=p)
