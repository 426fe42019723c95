"""Fit/predict API for the unweighted, ratio-weighted, and truncated
ratio-weighted kernel estimators across the five losses.

The dual box constraints are derived from the weighted objective
(1/n) sum_i w_i L(y_i, f(x_i)) + lambda ||f||_K^2 directly, which gives a
box scale of 1/(2 n lambda); the literature's C = 1/(n lambda) convention
corresponds to a regularizer of (lambda/2) ||f||^2 and would not minimize
this objective.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .kernels import KernelSpec, gram
from .losses import LOG2, LossSpec, loss_value
from .ratio import RatioModel, ratio_raw
from .solvers import (
    BoxQP,
    SolverError,
    irls_klr,
    solve_box_qp,
    solve_weighted_ridge,
)

WEIGHTINGS = ("unweighted", "irw", "tirw")
MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class FitConfig:
    loss: LossSpec
    kernel: KernelSpec
    lam: float
    weighting: str = "unweighted"
    truncation_level: float | None = None
    solver_tol: float = 1e-6
    solver_max_iter: int = 100_000

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError("lambda must be positive")
        if self.weighting not in WEIGHTINGS:
            raise ValueError(f"unknown weighting: {self.weighting!r}")
        if self.weighting == "tirw" and self.truncation_level is None:
            raise ValueError("tirw weighting requires a truncation_level")
        if self.truncation_level is not None and self.truncation_level <= 0:
            raise ValueError("truncation_level must be positive")

    def to_dict(self) -> dict:
        return {
            "loss": self.loss.to_dict(),
            "kernel": self.kernel.to_dict(),
            "lam": self.lam,
            "weighting": self.weighting,
            "truncation_level": self.truncation_level,
            "solver_tol": self.solver_tol,
            "solver_max_iter": self.solver_max_iter,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FitConfig":
        return cls(
            loss=LossSpec.from_dict(d["loss"]),
            kernel=KernelSpec.from_dict(d["kernel"]),
            lam=float(d["lam"]),
            weighting=d.get("weighting", "unweighted"),
            truncation_level=d.get("truncation_level"),
            solver_tol=float(d.get("solver_tol", 1e-6)),
            solver_max_iter=int(d.get("solver_max_iter", 100_000)),
        )


@dataclass
class FittedModel:
    alpha: np.ndarray
    bias: float | None
    kernel: KernelSpec
    train_x: np.ndarray
    loss: LossSpec
    weights_used: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    def to_json(self) -> str:
        doc = {
            "format_version": MODEL_FORMAT_VERSION,
            "alpha": self.alpha.tolist(),
            "bias": self.bias,
            "kernel": self.kernel.to_dict(),
            "loss": self.loss.to_dict(),
            "train_x": self.train_x.tolist(),
            "weights_used": self.weights_used.tolist(),
        }
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "FittedModel":
        doc = json.loads(text)
        if doc.get("format_version") != MODEL_FORMAT_VERSION:
            raise ValueError("unsupported model format version")
        return cls(
            alpha=np.asarray(doc["alpha"], dtype=float),
            bias=doc["bias"],
            kernel=KernelSpec.from_dict(doc["kernel"]),
            train_x=np.asarray(doc["train_x"], dtype=float),
            loss=LossSpec.from_dict(doc["loss"]),
            weights_used=np.asarray(doc["weights_used"], dtype=float),
        )


def _fit_weights(X, cfg: FitConfig, ratio: RatioModel | None) -> np.ndarray:
    n = X.shape[0]
    if cfg.weighting == "unweighted":
        return np.ones(n)
    if ratio is None:
        raise ValueError(f"weighting {cfg.weighting!r} requires a ratio model")
    w = ratio_raw(ratio, X)
    if np.any(w < 0):
        raise ValueError("estimated importance ratio is negative at a source point")
    if cfg.weighting == "tirw":
        w = np.minimum(w, cfg.truncation_level)
    return w


def _fit_huber(K, w, y, loss, lam):
    """Damped Newton on the smooth huber primal in alpha space."""
    n = K.shape[0]
    delta = loss.huber_delta
    alpha = np.zeros(n)
    f = K @ alpha

    def objective(f_vals, a_vals):
        return float(np.sum(w * loss_value(loss, y, f_vals)) / n + lam * a_vals @ K @ a_vals)

    obj = objective(f, alpha)
    eye = np.eye(n)
    for _ in range(200):
        r = y - f
        psi = np.clip(r, -delta, delta)
        mask = (np.abs(r) <= delta).astype(float)
        Wd = w * mask / n
        A = Wd[:, None] * K + 2.0 * lam * eye
        rhs = w * psi / n - 2.0 * lam * alpha
        try:
            direction = np.linalg.solve(A, rhs)
        except np.linalg.LinAlgError:
            A = A + 1e-12 * np.trace(K) / n * eye
            direction = np.linalg.solve(A, rhs)
        step = 1.0
        accepted = False
        for _half in range(40):
            trial = alpha + step * direction
            f_trial = K @ trial
            obj_trial = objective(f_trial, trial)
            if obj_trial <= obj - 1e-16:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        delta_inf = float(np.max(np.abs(trial - alpha)))
        alpha, f, obj = trial, f_trial, obj_trial
        if delta_inf <= 1e-10:
            break
    return alpha


def fit(data, cfg: FitConfig, ratio: RatioModel | None = None) -> FittedModel:
    """Fit the configured estimator on the source sample of `data`.

    `data` needs attributes source_x and source_y (see synthdata.Dataset);
    a (X, y) tuple is also accepted.
    """
    if isinstance(data, tuple):
        X, y = data
    else:
        X, y = data.source_x, data.source_y
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(y, dtype=float)
    n = X.shape[0]
    if n < 2:
        raise ValueError("need at least 2 source pairs")

    w = _fit_weights(X, cfg, ratio)
    if np.all(w == 0.0):
        raise ValueError("all fit weights are zero; check the truncation level")

    K = gram(cfg.kernel, X, X)
    loss = cfg.loss
    lam = cfg.lam
    bias = None
    diagnostics = {"weighting": cfg.weighting, "lambda": lam}

    if loss.kind == "squared":
        alpha = solve_weighted_ridge(K, w, y, n * lam)
    elif loss.kind == "huber":
        alpha = _fit_huber(K, w, y, loss, lam)
    elif loss.kind == "logistic":
        _require_labels(y)
        y01 = (y + 1.0) / 2.0
        alpha = irls_klr(K, w, w, y01, lambda_eff=2.0 * n * lam * LOG2)
    elif loss.kind == "check":
        c_box = 1.0 / (2.0 * n * lam)
        problem = BoxQP(
            Q=K,
            c=y,
            lower=c_box * (loss.tau - 1.0) * w,
            upper=c_box * loss.tau * w,
            eq_coeffs=np.ones(n),
            eq_target=0.0,
        )
        sol = _run_qp(problem, cfg)
        alpha, bias = sol.alpha, sol.eq_dual
        diagnostics.update(kkt_residual=sol.kkt_residual, iterations=sol.iterations)
    else:  # hinge
        _require_labels(y)
        c_box = 1.0 / (2.0 * n * lam)
        Kt = K * np.outer(y, y)
        problem = BoxQP(
            Q=Kt,
            c=np.ones(n),
            lower=np.zeros(n),
            upper=c_box * w,
            eq_coeffs=y,
            eq_target=0.0,
        )
        sol = _run_qp(problem, cfg)
        alpha, bias = sol.alpha * y, sol.eq_dual
        diagnostics.update(kkt_residual=sol.kkt_residual, iterations=sol.iterations)

    # weighted primal objective at the fit; bias enters the loss term only
    # (it is the unpenalized offset of the dual formulations)
    f_in = K @ alpha + (bias if bias is not None else 0.0)
    diagnostics["objective"] = float(
        np.sum(w * loss_value(loss, y, f_in)) / n + lam * alpha @ K @ alpha
    )
    return FittedModel(
        alpha=alpha,
        bias=bias,
        kernel=cfg.kernel,
        train_x=X,
        loss=loss,
        weights_used=w,
        diagnostics=diagnostics,
    )


def _require_labels(y):
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ValueError("margin losses require labels in {-1, +1}")


def _run_qp(problem: BoxQP, cfg: FitConfig):
    try:
        return solve_box_qp(problem, tol=cfg.solver_tol, max_iter=cfg.solver_max_iter)
    except SolverError as exc:
        raise SolverError(
            f"dual solver failed for loss {cfg.loss.kind!r}: {exc}",
            solution=exc.solution,
        ) from exc


def predict(model: FittedModel, X) -> np.ndarray:
    """Evaluate sum_i alpha_i K(x_i, .) (+ bias) at the rows of X."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[1] != model.train_x.shape[1]:
        raise ValueError(
            f"dimension mismatch: {X.shape[1]} vs training {model.train_x.shape[1]}"
        )
    out = gram(model.kernel, X, model.train_x) @ model.alpha
    if model.bias is not None:
        out = out + model.bias
    return out


def classify(model: FittedModel, X) -> np.ndarray:
    """Sign of predict with the 0 -> +1 tie rule; classification losses only."""
    if not model.loss.is_classification:
        raise ValueError("classify requires a hinge or logistic model")
    vals = predict(model, X)
    return np.where(vals >= 0.0, 1.0, -1.0)
