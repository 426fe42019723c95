"""Target-distribution evaluation metrics and log-log rate slopes."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .estimators import FittedModel, classify, predict
from .losses import LossSpec, loss_value


@dataclass(frozen=True)
class EvalReport:
    n_eval: int
    mse: float | None = None
    excess_risk: float | None = None
    misclassification: float | None = None


def mse_target(model: FittedModel, target_x, truth_f) -> float:
    """Monte-Carlo L2(P_T) error: mean squared gap to f* over the target sample."""
    target_x = np.asarray(target_x, dtype=float)
    if target_x.shape[0] == 0:
        raise ValueError("empty target sample")
    diff = predict(model, target_x) - np.asarray(truth_f(target_x), dtype=float)
    return float(np.mean(diff**2))


def excess_risk_empirical(model: FittedModel, target_x, target_y, loss: LossSpec, truth_f) -> float:
    """Mean of L(y, fhat(x)) - L(y, f*(x)) over the target sample.

    May be slightly negative by Monte-Carlo noise; returned as-is.
    """
    target_x = np.asarray(target_x, dtype=float)
    target_y = np.asarray(target_y, dtype=float)
    if target_x.shape[0] == 0:
        raise ValueError("empty target sample")
    fhat = predict(model, target_x)
    fstar = np.asarray(truth_f(target_x), dtype=float)
    return float(np.mean(loss_value(loss, target_y, fhat) - loss_value(loss, target_y, fstar)))


def misclassification(model: FittedModel, target_x, target_y) -> float:
    """Fraction of sign disagreements (prediction 0 counts as +1)."""
    target_y = np.asarray(target_y, dtype=float)
    if not np.all(np.isin(target_y, (-1.0, 1.0))):
        raise ValueError("labels must be in {-1, +1}")
    pred = classify(model, target_x)
    return float(np.mean(pred != target_y))


def rate_slope(ns, errors) -> tuple[float, float]:
    """Least-squares slope and intercept of log(error) on log(n)."""
    ns = np.asarray(ns, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if ns.shape[0] < 3:
        raise ValueError("need at least 3 points")
    if np.any(errors <= 0):
        raise ValueError("errors must be positive")
    slope, intercept = np.polyfit(np.log(ns), np.log(errors), 1)
    return float(slope), float(intercept)
