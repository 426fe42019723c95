"""Target-side metrics and the log-log rate slope."""

import numpy as np
import pytest

from kernelshift.estimators import FittedModel
from kernelshift.kernels import KernelSpec
from kernelshift.losses import LossSpec
from kernelshift.metrics import (
    excess_risk_empirical,
    misclassification,
    mse_target,
    rate_slope,
)

KERNEL = KernelSpec("gaussian", bandwidth=1.0)


def _zero_model(loss=LossSpec("squared")):
    return FittedModel(
        alpha=np.zeros(2),
        bias=None,
        kernel=KERNEL,
        train_x=np.zeros((2, 1)),
        loss=loss,
        weights_used=np.ones(2),
    )


def test_mse_target_known_value(rng):
    model = _zero_model()
    X = rng.normal(size=(50, 1))
    assert mse_target(model, X, lambda x: 2.0 * np.ones(x.shape[0])) == pytest.approx(4.0)
    with pytest.raises(ValueError):
        mse_target(model, np.empty((0, 1)), lambda x: np.ones(0))


def test_excess_risk_zero_at_truth(rng):
    model = _zero_model()
    X = rng.normal(size=(30, 1))
    y = rng.normal(size=30)
    # f* identical to the model's prediction (zero) gives exactly 0
    risk = excess_risk_empirical(
        model, X, y, LossSpec("squared"), lambda x: np.zeros(x.shape[0])
    )
    assert risk == 0.0
    # against the true conditional mean the zero model can only be worse
    risk2 = excess_risk_empirical(
        model, X, 3.0 + 0.01 * rng.normal(size=30), LossSpec("squared"),
        lambda x: 3.0 * np.ones(x.shape[0]),
    )
    assert risk2 > 0.0


def test_misclassification_counts_sign_errors():
    model = FittedModel(
        alpha=np.array([1.0]),
        bias=0.0,
        kernel=KernelSpec("linear"),
        train_x=np.array([[1.0]]),
        loss=LossSpec("hinge"),
        weights_used=np.ones(1),
    )
    # linear kernel, alpha=1, train point 1.0: f(x) = x, sign tie at 0 -> +1
    X = np.array([[-1.0], [0.0], [2.0], [-3.0]])
    y = np.array([1.0, 1.0, 1.0, -1.0])
    assert misclassification(model, X, y) == pytest.approx(0.25)
    with pytest.raises(ValueError):
        misclassification(model, X, np.array([0.0, 1.0, 1.0, -1.0]))


def test_rate_slope_recovers_power_law():
    ns = np.array([100, 200, 400, 800])
    errors = 5.0 * ns.astype(float) ** -1.0
    slope, intercept = rate_slope(ns, errors)
    assert slope == pytest.approx(-1.0)
    assert intercept == pytest.approx(np.log(5.0))
    with pytest.raises(ValueError):
        rate_slope([100, 200], [1.0, 0.5])
    with pytest.raises(ValueError):
        rate_slope([100, 200, 400], [1.0, 0.5, 0.0])
