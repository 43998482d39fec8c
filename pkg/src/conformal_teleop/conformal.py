"""Online adaptive calibration of regressed quantile intervals.

The controller's raw (mean, lower, upper) heads are turned into per-dimension
offset bounds, scored with a multiplicative nonconformity factor, and expanded
by an adaptive empirical quantile of past scores. A side-by-side additive
variant is kept as a baseline, along with the scalar uncertainty monitor built
on calibrated interval diameters.

Streaming semantics: the interval for step t is built from the scores of steps
1..t-1 only; the current label's score is appended afterwards, so a label
never influences its own interval.
"""

from __future__ import annotations

import csv
import math
from bisect import insort
from dataclasses import dataclass, field

import numpy as np

DEFAULT_EPSILON = 1e-3
DEFAULT_GAMMA = 0.005


class EmptyCalibrationError(ValueError):
    """Raised when a quantile is requested from an empty score set."""


def _pred_arrays(pred) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Accept a QuantilePrediction-like object or a plain (a_hat, q_lo, q_hi) triple."""
    if hasattr(pred, "a_hat"):
        parts = (pred.a_hat, pred.q_lo, pred.q_hi)
    else:
        parts = pred
    a_hat, q_lo, q_hi = (np.atleast_1d(np.asarray(p, dtype=float)) for p in parts)
    return a_hat, q_lo, q_hi


@dataclass
class PredictionInterval:
    """Per-dimension calibrated bounds plus the expansion factor that built them."""

    lower: np.ndarray
    upper: np.ndarray
    lam: float = 1.0
    alpha_used: float = float("nan")

    def __post_init__(self):
        self.lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        self.upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if self.lower.shape != self.upper.shape:
            raise ValueError("lower/upper shape mismatch")
        if np.any(self.lower > self.upper):
            raise ValueError("interval requires lower <= upper elementwise")

    def contains(self, point) -> bool:
        y = np.atleast_1d(np.asarray(point, dtype=float))
        return bool(np.all(y >= self.lower) and np.all(y <= self.upper))


@dataclass
class MonitorConfig:
    beta: float

    def __post_init__(self):
        if self.beta <= 0:
            raise ValueError("beta must be positive")


def delta_bounds(pred, epsilon: float = DEFAULT_EPSILON) -> tuple[np.ndarray, np.ndarray]:
    """Offsets of the regressed quantiles from the mean head, floored at epsilon.

    Returns (delta_minus, delta_plus). The floor keeps crossed or degenerate
    quantile heads from collapsing the multiplicative score's denominators.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    a_hat, q_lo, q_hi = _pred_arrays(pred)
    delta_plus = np.maximum(q_hi - a_hat, epsilon)
    delta_minus = np.maximum(a_hat - q_lo, epsilon)
    return delta_minus, delta_plus


def nonconformity_score(pred, deltas: tuple[np.ndarray, np.ndarray], action_true) -> float:
    """Smallest factor rho with action_true inside [a_hat - rho*d-, a_hat + rho*d+] on all dims."""
    a_hat, _, _ = _pred_arrays(pred)
    delta_minus, delta_plus = deltas
    y = np.atleast_1d(np.asarray(action_true, dtype=float))
    over = (y - a_hat) / delta_plus
    under = (a_hat - y) / delta_minus
    return float(max(0.0, np.max(np.maximum(over, under))))


def adaptive_quantile(scores, alpha_t: float) -> float:
    """(1 - alpha_t)(1 + 1/n)-th empirical quantile as a ceil-indexed order statistic.

    The level is clamped to [0, 1], so out-of-range alpha_t degrades to the
    extreme order statistics instead of failing.
    """
    ordered = sorted(scores)
    return _quantile_sorted(ordered, alpha_t)


def _quantile_sorted(ordered, alpha_t: float) -> float:
    n = len(ordered)
    if n == 0:
        raise EmptyCalibrationError("no calibration scores yet")
    level = (1.0 - alpha_t) * (1.0 + 1.0 / n)
    level = min(1.0, max(0.0, level))
    k = min(n, max(1, math.ceil(level * n)))
    return float(ordered[k - 1])


def calibrated_interval(pred, deltas: tuple[np.ndarray, np.ndarray], lam: float,
                        alpha_used: float = float("nan")) -> PredictionInterval:
    """[a_hat - lam*delta_minus, a_hat + lam*delta_plus], elementwise."""
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    a_hat, _, _ = _pred_arrays(pred)
    delta_minus, delta_plus = deltas
    return PredictionInterval(
        lower=a_hat - lam * delta_minus,
        upper=a_hat + lam * delta_plus,
        lam=float(lam),
        alpha_used=alpha_used,
    )


def alpha_update(alpha_t: float, gamma: float, alpha_target: float, err: int) -> float:
    """One online step alpha_t + gamma*(alpha_target - err); deliberately unclamped."""
    return alpha_t + gamma * (alpha_target - err)


@dataclass
class AcqrState:
    """Sequential calibration state; step order is part of its meaning.

    ``scores`` is kept sorted (it is a multiset: quantiles only depend on the
    values, not the arrival order).
    """

    alpha_target: float
    gamma: float = DEFAULT_GAMMA
    alpha_t: float = None  # type: ignore[assignment]
    alpha_init: float = None  # type: ignore[assignment]
    lambda0: float = 1.0
    scores: list[float] = field(default_factory=list)
    t: int = 0
    err_history: list[int] = field(default_factory=list)

    def __post_init__(self):
        if not 0.0 < self.alpha_target < 1.0:
            raise ValueError("alpha_target must be in (0, 1)")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.alpha_t is None:
            self.alpha_t = self.alpha_target
        if self.alpha_init is None:
            self.alpha_init = self.alpha_t

    def current_lambda(self) -> float:
        """Expansion factor the next step will use; lambda0 before any evidence."""
        if not self.scores:
            return self.lambda0
        return _quantile_sorted(self.scores, self.alpha_t)


def _forced_err(alpha_t: float) -> int | None:
    """Out-of-range alpha follows the adaptive-conformal set conventions.

    alpha_t >= 1 means the procedure demands an empty prediction set (err is 1
    no matter what), alpha_t <= 0 the whole space (err is 0). These two cases
    are what pin alpha_t inside [-gamma, 1+gamma] and make the coverage-gap
    bound hold on every stream, including degenerate ones.
    """
    if alpha_t >= 1.0:
        return 1
    if alpha_t <= 0.0:
        return 0
    return None


def acqr_step(state: AcqrState, pred, action_true,
              epsilon: float = DEFAULT_EPSILON) -> tuple[PredictionInterval, int, AcqrState]:
    """Advance one calibration step: interval, coverage check, score, alpha update.

    The passed state is advanced in place and returned; callers must treat the
    pre-step state as consumed.
    """
    y = np.atleast_1d(np.asarray(action_true, dtype=float))
    deltas = delta_bounds(pred, epsilon)
    lam = state.current_lambda()
    interval = calibrated_interval(pred, deltas, lam, alpha_used=state.alpha_t)
    forced = _forced_err(state.alpha_t)
    err = forced if forced is not None else (0 if interval.contains(y) else 1)
    rho = nonconformity_score(pred, deltas, y)
    insort(state.scores, rho)
    state.err_history.append(err)
    state.t += 1
    state.alpha_t = alpha_update(state.alpha_t, state.gamma, state.alpha_target, err)
    return interval, err, state


def uncertainty_score(interval: PredictionInterval) -> float:
    """Scalar uncertainty: L2 norm of the interval diameter vector."""
    return float(np.linalg.norm(interval.upper - interval.lower))


def monitor(u: float, config: MonitorConfig) -> bool:
    """Flag high uncertainty; strict comparison, so u == beta is not flagged."""
    return u > config.beta


def coverage_gap_bound(t: int, alpha_init: float, gamma: float) -> float:
    """Worst-case |empirical error rate - target| after t steps."""
    if t < 1:
        raise ValueError("t must be >= 1")
    return (max(alpha_init, 1.0 - alpha_init) + gamma) / (t * gamma)


def check_coverage_bound(err_history, alpha_target: float, alpha_init: float,
                         gamma: float) -> bool:
    """True iff the coverage-gap bound holds at every prefix of the run."""
    errs = np.asarray(err_history, dtype=float)
    if len(errs) == 0:
        return True
    t = np.arange(1, len(errs) + 1, dtype=float)
    gaps = np.abs(np.cumsum(errs) / t - alpha_target)
    bounds = (max(alpha_init, 1.0 - alpha_init) + gamma) / (t * gamma)
    return bool(np.all(gaps <= bounds))


# --- additive conformalized-QR baseline ---------------------------------


def cqr_score(pred, action_true) -> float:
    """Additive conformity score max(q_lo - y, y - q_hi), maxed over dims.

    Negative exactly when the label is strictly inside the raw interval on
    every dimension.
    """
    _, q_lo, q_hi = _pred_arrays(pred)
    y = np.atleast_1d(np.asarray(action_true, dtype=float))
    return float(np.max(np.maximum(q_lo - y, y - q_hi)))


def cqr_interval(pred, q_correction: float,
                 alpha_used: float = float("nan")) -> PredictionInterval:
    """Symmetric additive expansion of the raw quantile interval on every dim."""
    _, q_lo, q_hi = _pred_arrays(pred)
    lower = q_lo - q_correction
    upper = q_hi + q_correction
    # A negative correction can cross a degenerate interval; collapse to midpoint.
    mid = 0.5 * (lower + upper)
    lower = np.minimum(lower, mid)
    upper = np.maximum(upper, mid)
    return PredictionInterval(lower=lower, upper=upper, lam=1.0, alpha_used=alpha_used)


@dataclass
class CqrState:
    """Online state for the additive baseline; mirrors AcqrState."""

    alpha_target: float
    gamma: float = DEFAULT_GAMMA
    alpha_t: float = None  # type: ignore[assignment]
    alpha_init: float = None  # type: ignore[assignment]
    scores: list[float] = field(default_factory=list)
    t: int = 0
    err_history: list[int] = field(default_factory=list)

    def __post_init__(self):
        if self.alpha_t is None:
            self.alpha_t = self.alpha_target
        if self.alpha_init is None:
            self.alpha_init = self.alpha_t

    def current_correction(self) -> float:
        # Additive identity before any evidence: the raw regressed interval.
        if not self.scores:
            return 0.0
        return _quantile_sorted(self.scores, self.alpha_t)


def cqr_step(state: CqrState, pred, action_true) -> tuple[PredictionInterval, int, CqrState]:
    y = np.atleast_1d(np.asarray(action_true, dtype=float))
    correction = state.current_correction()
    interval = cqr_interval(pred, correction, alpha_used=state.alpha_t)
    forced = _forced_err(state.alpha_t)
    err = forced if forced is not None else (0 if interval.contains(y) else 1)
    insort(state.scores, cqr_score(pred, y))
    state.err_history.append(err)
    state.t += 1
    state.alpha_t = alpha_update(state.alpha_t, state.gamma, state.alpha_target, err)
    return interval, err, state


# --- per-step trace export ----------------------------------------------


def trace_columns(n_a: int) -> list[str]:
    cols = ["t", "alpha_t", "lambda_t", "err_t", "U_t", "flagged", "pred_err"]
    cols += [f"lower_{d}" for d in range(n_a)]
    cols += [f"upper_{d}" for d in range(n_a)]
    return cols


def trace_row(t: int, alpha_t: float, lam: float, err: int, u: float, flagged: bool,
              pred_err: float, interval: PredictionInterval) -> list:
    row = [t, repr(float(alpha_t)), repr(float(lam)), err, repr(float(u)),
           int(flagged), repr(float(pred_err))]
    row += [repr(float(v)) for v in interval.lower]
    row += [repr(float(v)) for v in interval.upper]
    return row


def write_trace(path, rows: list[list], n_a: int) -> None:
    """One CSV row per calibration step; floats use round-trip repr."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(trace_columns(n_a))
        writer.writerows(rows)
