"""Coverage, interval-size, and monitor-separation metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .conformal import PredictionInterval
from .stats import StatisticsError, welch_ttest


def coverage(calib_stream) -> float:
    """Fraction of steps whose action lies inside its interval on all dims.

    ``calib_stream`` pairs each step's labeled sample (a LabeledTriple or a
    bare action vector) with its PredictionInterval.
    """
    hits = 0
    total = 0
    for sample, interval in calib_stream:
        action = getattr(sample, "action", sample)
        hits += interval.contains(action)
        total += 1
    if total == 0:
        raise ValueError("empty calibration stream")
    return hits / total


def interval_length(interval: PredictionInterval) -> float:
    """Upper-lower distance averaged across dimensions."""
    return float(np.mean(interval.upper - interval.lower))


@dataclass
class MonitorStats:
    n_flagged: int
    n_unflagged: int
    mean_flagged: float
    std_flagged: float
    mean_unflagged: float
    std_unflagged: float
    t: float
    df: float
    p: float
    inconclusive: bool

    def as_dict(self) -> dict:
        return {
            "n_flagged": self.n_flagged,
            "n_unflagged": self.n_unflagged,
            "mean_flagged": self.mean_flagged,
            "std_flagged": self.std_flagged,
            "mean_unflagged": self.mean_unflagged,
            "std_unflagged": self.std_unflagged,
            "t": self.t,
            "df": self.df,
            "p": self.p,
            "inconclusive": self.inconclusive,
        }


def _group_stats(values: list) -> tuple[float, float]:
    if not values:
        return math.nan, math.nan
    mean = float(np.mean(values))
    std = float(np.std(values, ddof=1)) if len(values) > 1 else math.nan
    return mean, std


def monitor_separation(trace) -> MonitorStats:
    """Split per-step prediction errors by monitor flag and Welch-test them.

    ``trace`` yields (U, flagged, prediction_error) rows. An empty group (or a
    degenerate variance) is reported as inconclusive rather than raised.
    """
    flagged_err, unflagged_err = [], []
    for _, flagged, pred_err in trace:
        (flagged_err if flagged else unflagged_err).append(float(pred_err))
    mean_f, std_f = _group_stats(flagged_err)
    mean_u, std_u = _group_stats(unflagged_err)
    t = df = p = math.nan
    inconclusive = True
    if flagged_err and unflagged_err:
        try:
            result = welch_ttest(flagged_err, unflagged_err)
            t, df, p = result.t, result.df, result.p
            inconclusive = False
        except StatisticsError:
            pass
    return MonitorStats(
        n_flagged=len(flagged_err), n_unflagged=len(unflagged_err),
        mean_flagged=mean_f, std_flagged=std_f,
        mean_unflagged=mean_u, std_unflagged=std_u,
        t=t, df=df, p=p, inconclusive=inconclusive,
    )
