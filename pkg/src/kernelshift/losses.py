"""The five-member convex loss family: values, subgradients, Lipschitz bounds."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

VALID_KINDS = ("squared", "check", "huber", "logistic", "hinge")
MARGIN_KINDS = ("logistic", "hinge")

# integer codes shared with the numba oracle in solvers.py
LOSS_CODES = {k: i for i, k in enumerate(VALID_KINDS)}

LOG2 = float(np.log(2.0))


@dataclass(frozen=True)
class LossSpec:
    """Loss kind plus its parameters.

    tau: quantile level, check loss only.
    huber_delta: transition point of the huber loss, huber only.
    """

    kind: str
    tau: float | None = None
    huber_delta: float | None = None

    def __post_init__(self):
        if self.kind not in VALID_KINDS:
            raise ValueError(f"unknown loss kind: {self.kind!r}")
        if self.kind == "check":
            if self.tau is None or not 0.0 < self.tau < 1.0:
                raise ValueError("check loss requires tau in (0, 1)")
        elif self.tau is not None:
            raise ValueError("tau is only valid for the check loss")
        if self.kind == "huber":
            if self.huber_delta is None or self.huber_delta <= 0:
                raise ValueError("huber loss requires huber_delta > 0")
        elif self.huber_delta is not None:
            raise ValueError("huber_delta is only valid for the huber loss")

    @property
    def is_classification(self) -> bool:
        return self.kind in MARGIN_KINDS

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == "check":
            d["tau"] = float(self.tau)
        if self.kind == "huber":
            d["huber_delta"] = float(self.huber_delta)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "LossSpec":
        return cls(kind=d["kind"], tau=d.get("tau"), huber_delta=d.get("huber_delta"))


def _check_labels(kind: str, y):
    if kind in MARGIN_KINDS:
        y = np.asarray(y)
        if not np.all(np.isin(y, (-1.0, 1.0))):
            raise ValueError(f"{kind} loss requires labels in {{-1, +1}}")


def loss_value(spec: LossSpec, y, f):
    """L(y, f), elementwise over arrays.

    The logistic loss is scaled by 1/log 2 so that L(y, 0) = 1.
    The huber quadratic branch is r^2/2 so the two branches join
    continuously at |r| = delta.
    """
    _check_labels(spec.kind, y)
    y = np.asarray(y, dtype=float)
    f = np.asarray(f, dtype=float)
    if spec.kind == "squared":
        return (y - f) ** 2
    if spec.kind == "check":
        r = y - f
        return r * (spec.tau - (r <= 0.0))
    if spec.kind == "huber":
        r = np.abs(y - f)
        d = spec.huber_delta
        return np.where(r <= d, 0.5 * r**2, d * r - 0.5 * d**2)
    if spec.kind == "logistic":
        m = y * f
        # log1p(exp(-m)) computed stably for large |m|
        return (np.logaddexp(0.0, -m)) / LOG2
    return np.maximum(0.0, 1.0 - y * f)


def loss_subgradient(spec: LossSpec, y, f):
    """A subgradient of f -> L(y, f), elementwise.

    At kinks (check at y = f, hinge at y f = 1) returns the midpoint of
    the subdifferential interval.
    """
    _check_labels(spec.kind, y)
    y = np.asarray(y, dtype=float)
    f = np.asarray(f, dtype=float)
    if spec.kind == "squared":
        return -2.0 * (y - f)
    if spec.kind == "check":
        r = y - f
        g = np.where(r > 0.0, -spec.tau, 1.0 - spec.tau)
        return np.where(r == 0.0, 0.5 - spec.tau, g)
    if spec.kind == "huber":
        r = y - f
        d = spec.huber_delta
        return -np.clip(r, -d, d)
    if spec.kind == "logistic":
        m = y * f
        sig = 1.0 / (1.0 + np.exp(np.clip(m, -500.0, 500.0)))
        return -y * sig / LOG2
    m = y * f
    g = np.where(m < 1.0, -y, 0.0)
    return np.where(m == 1.0, -0.5 * y, g)


def lipschitz_bound(spec: LossSpec, V: float, M_y: float) -> float:
    """Local Lipschitz constant of L(y, .) on [-V, V] with |y| <= M_y."""
    if V < 0 or M_y <= 0:
        raise ValueError("V must be nonnegative and M_y positive")
    if spec.kind == "squared":
        return 2.0 * (M_y + V)
    if spec.kind in ("check", "hinge"):
        return 1.0
    if spec.kind == "huber":
        return float(spec.huber_delta)
    ev = np.exp(V)
    return float(ev / (1.0 + ev) / LOG2)
