"""Analytic density ratios, KLIEP, truncation, and shift classification."""

import numpy as np
import pytest

from kernelshift.kernels import KernelSpec, gram
from kernelshift.ratio import (
    DensitySpec,
    RatioModel,
    analytic_ratio,
    classify_shift,
    estimate_beta_sq,
    kliep_fit,
    ratio_eval,
    ratio_raw,
    truncation_level,
)

NORMAL_PAIR = (DensitySpec("normal", (0.0, 0.4)), DensitySpec("normal", (1.5, 0.6)))


# ---------------------------------------------------------------------------
# densities and analytic ratios
# ---------------------------------------------------------------------------

def test_density_spec_validation():
    with pytest.raises(ValueError):
        DensitySpec("uniform", (0.0, 1.0))
    with pytest.raises(ValueError):
        DensitySpec("normal", (0.0, 0.0))
    with pytest.raises(ValueError):
        DensitySpec("beta", (-1.0, 2.0))


def test_density_round_trip():
    for spec in (DensitySpec("normal", (1.0, 2.0)), DensitySpec("beta", (3.0, 6.0))):
        assert DensitySpec.from_dict(spec.to_dict()) == spec


def test_normal_logpdf_value():
    spec = DensitySpec("normal", (0.0, 1.0))
    assert float(spec.logpdf(0.0)) == pytest.approx(-0.5 * np.log(2.0 * np.pi))


def test_beta_support_error():
    spec = DensitySpec("beta", (2.0, 3.0))
    with pytest.raises(ValueError):
        spec.logpdf(np.array([0.5, 1.5]))
    with pytest.raises(ValueError):
        spec.logpdf(0.0)


def test_analytic_ratio_identity():
    spec = DensitySpec("normal", (0.3, 0.7))
    x = np.linspace(-2, 2, 11)
    assert np.allclose(analytic_ratio(spec, spec, x), 1.0)


def test_analytic_ratio_normal_pair_at_zero():
    source, target = NORMAL_PAIR
    expected = np.sqrt(0.4 / 0.6) * np.exp(-(1.5**2) / (2.0 * 0.6))
    assert analytic_ratio(source, target, 0.0)[0] == pytest.approx(expected)


def test_analytic_ratio_beta_pair_unbounded_tail():
    source = DensitySpec("beta", (4.0, 1.0))
    target = DensitySpec("beta", (3.0, 6.0))
    vals = analytic_ratio(source, target, np.array([1e-2, 1e-3, 1e-4]))
    assert vals[0] < vals[1] < vals[2]


def test_analytic_ratio_uses_first_coordinate_only(rng):
    source, target = NORMAL_PAIR
    X = rng.normal(size=(20, 3))
    assert np.allclose(
        analytic_ratio(source, target, X), analytic_ratio(source, target, X[:, 0])
    )


# ---------------------------------------------------------------------------
# RatioModel
# ---------------------------------------------------------------------------

def test_ratio_model_validation():
    with pytest.raises(ValueError):
        RatioModel(kind="mystery")
    with pytest.raises(ValueError):
        RatioModel(kind="analytic", source=NORMAL_PAIR[0])
    with pytest.raises(ValueError):
        RatioModel(
            kind="kliep",
            basis_points=np.zeros((2, 1)),
            coeffs=np.array([1.0, -0.1]),
            kernel=KernelSpec("gaussian", bandwidth=1.0),
        )
    with pytest.raises(ValueError):
        RatioModel(kind="constant_one", truncation=0.0)


def test_ratio_model_round_trip(rng):
    models = [
        RatioModel(kind="constant_one", truncation=2.0),
        RatioModel(kind="analytic", source=NORMAL_PAIR[0], target=NORMAL_PAIR[1]),
        RatioModel(
            kind="kliep",
            basis_points=rng.normal(size=(4, 2)),
            coeffs=rng.uniform(0.0, 1.0, size=4),
            kernel=KernelSpec("gaussian", bandwidth=0.8),
            truncation=5.0,
        ),
    ]
    X = rng.normal(size=(10, 2))
    for model in models:
        back = RatioModel.from_dict(model.to_dict())
        assert back.kind == model.kind
        assert back.truncation == model.truncation
        assert np.allclose(ratio_eval(back, X), ratio_eval(model, X))


def test_ratio_eval_truncation():
    model = RatioModel(
        kind="analytic", source=NORMAL_PAIR[0], target=NORMAL_PAIR[1], truncation=3.0
    )
    x = np.linspace(-1.0, 3.0, 41)
    raw = ratio_raw(model, x)
    assert raw.max() > 3.0
    vals = ratio_eval(model, x)
    assert np.allclose(vals, np.minimum(raw, 3.0))
    assert np.all(vals <= raw)


def test_ratio_eval_constant_one_scalar():
    model = RatioModel(kind="constant_one")
    assert ratio_eval(model, 0.7) == 1.0


def test_ratio_eval_kliep_unit_coeff_basis_point():
    basis = np.array([[0.0], [2.0], [-1.5]])
    for k in range(3):
        coeffs = np.zeros(3)
        coeffs[k] = 1.0
        model = RatioModel(
            kind="kliep",
            basis_points=basis,
            coeffs=coeffs,
            kernel=KernelSpec("gaussian", bandwidth=1e-3),
        )
        # with a tiny bandwidth the cross terms vanish: K(x_k, x_k) = 1
        assert ratio_eval(model, basis[k])[0] == pytest.approx(1.0)


# ---------------------------------------------------------------------------
# truncation level and beta^2 estimation
# ---------------------------------------------------------------------------

def test_truncation_level_values():
    assert truncation_level(100, 4.0) == 20.0
    assert truncation_level(10_000, 1.0) == 100.0
    assert truncation_level(500, 2.0) == pytest.approx(np.sqrt(1000.0))
    with pytest.raises(ValueError):
        truncation_level(0, 4.0)
    with pytest.raises(ValueError):
        truncation_level(100, 0.5)


def test_estimate_beta_sq_values(rng):
    model = RatioModel(kind="constant_one")
    assert estimate_beta_sq(model, rng.normal(size=(10, 1))) == 1.0
    # a kliep expansion with one basis function: ratio(x) = 3 exp(-x^2 / 2)
    model = RatioModel(
        kind="kliep",
        basis_points=np.array([[0.0]]),
        coeffs=np.array([3.0]),
        kernel=KernelSpec("gaussian", bandwidth=1.0),
    )
    x_one = np.sqrt(2.0 * np.log(3.0))  # ratio there is exactly 1
    est = estimate_beta_sq(model, np.array([[0.0], [x_one]]))
    assert est == pytest.approx(5.0)  # (9 + 1) / 2
    with pytest.raises(ValueError):
        estimate_beta_sq(model, np.array([[0.0]]))


def test_estimate_beta_sq_matches_closed_form():
    # bounded-ratio pair: the Monte Carlo estimate is well behaved here.
    # (For moment-bounded-only pairs the integrand of E_S[ratio^2] puts its
    # mass far in the source tail, so no moderate sample can estimate it.)
    source = DensitySpec("normal", (0.0, 0.4))
    target = DensitySpec("normal", (0.5, 0.3))
    diag = classify_shift(source, target)
    assert diag.beta_sq is not None
    model = RatioModel(kind="analytic", source=source, target=target)
    rng = np.random.default_rng(7)
    x = rng.normal(0.0, np.sqrt(0.4), size=(2000, 1))
    est = estimate_beta_sq(model, x)
    assert abs(est - diag.beta_sq) <= 0.15 * diag.beta_sq


# ---------------------------------------------------------------------------
# KLIEP
# ---------------------------------------------------------------------------

def test_kliep_no_shift_mean_near_one(rng):
    source = rng.normal(size=(500, 1))
    target = rng.normal(size=(500, 1))
    model = kliep_fit(source, target)
    mean_ratio = float(ratio_raw(model, source).mean())
    assert 0.8 <= mean_ratio <= 1.2
    assert np.all(np.asarray(model.coeffs) >= 0.0)
    # normalization residual <= 1e-6 is asserted by kliep_fit itself
    assert abs(mean_ratio - 1.0) <= 1e-6


def test_kliep_single_basis_forced_by_normalization(rng):
    source = rng.normal(size=(50, 1))
    target = rng.normal(size=(60, 1))
    kernel = KernelSpec("gaussian", bandwidth=1.0)
    model = kliep_fit(source, target, b=1, kernel=kernel)
    ksum = gram(kernel, source, model.basis_points).sum()
    assert float(model.coeffs[0]) == pytest.approx(50.0 / ksum)


def test_kliep_recovers_normal_pair_ratio(rng):
    source_d, target_d = NORMAL_PAIR
    source = rng.normal(0.0, np.sqrt(0.4), size=(200, 1))
    target = rng.normal(1.5, np.sqrt(0.6), size=(200, 1))
    model = kliep_fit(
        source, target, b=200, kernel=KernelSpec("gaussian", bandwidth=0.2)
    )
    est = ratio_raw(model, target)
    truth = analytic_ratio(source_d, target_d, target)
    corr = float(np.corrcoef(est, truth)[0, 1])
    assert corr >= 0.9


def test_kliep_validation(rng):
    source = rng.normal(size=(10, 1))
    target = rng.normal(size=(10, 1))
    with pytest.raises(ValueError):
        kliep_fit(source, target, b=11)
    with pytest.raises(ValueError):
        kliep_fit(source[:1], target)
    with pytest.raises(ValueError):
        # far-apart samples with a tiny bandwidth: normalization impossible
        kliep_fit(source, target + 100.0, kernel=KernelSpec("gaussian", bandwidth=0.01))


# ---------------------------------------------------------------------------
# shift classification
# ---------------------------------------------------------------------------

def test_classify_shift_beta_cases():
    uni = classify_shift(DensitySpec("beta", (2.5, 1.5)), DensitySpec("beta", (3.0, 4.0)))
    assert uni.classification == "uniformly_bounded"
    assert uni.alpha_bound is not None and np.isfinite(uni.alpha_bound)
    mom = classify_shift(DensitySpec("beta", (4.0, 1.0)), DensitySpec("beta", (3.0, 6.0)))
    assert mom.classification == "moment_bounded_only"
    assert mom.alpha_bound is None
    assert mom.beta_sq is not None and np.isfinite(mom.beta_sq)


def test_classify_shift_identical():
    spec = DensitySpec("beta", (2.0, 2.0))
    diag = classify_shift(spec, spec)
    assert diag.classification == "uniformly_bounded"
    assert diag.alpha_bound == pytest.approx(1.0)
    assert diag.beta_sq == pytest.approx(1.0)
    nspec = DensitySpec("normal", (0.5, 1.0))
    ndiag = classify_shift(nspec, nspec)
    assert ndiag.classification == "uniformly_bounded"
    assert ndiag.alpha_bound == pytest.approx(1.0)


def test_classify_shift_normal_cases():
    moment = classify_shift(*NORMAL_PAIR)
    assert moment.classification == "moment_bounded_only"
    assert moment.beta_sq is not None
    unbounded = classify_shift(
        DensitySpec("normal", (0.0, 1.0)), DensitySpec("normal", (0.0, 2.0))
    )
    assert unbounded.classification == "unbounded_second_moment"
    uniform = classify_shift(
        DensitySpec("normal", (0.0, 1.0)), DensitySpec("normal", (0.5, 0.5))
    )
    assert uniform.classification == "uniformly_bounded"
    assert uniform.alpha_bound is not None


def test_classify_shift_mixed_families_error():
    with pytest.raises(ValueError):
        classify_shift(DensitySpec("normal", (0.0, 1.0)), DensitySpec("beta", (2.0, 2.0)))


def test_alpha_bound_dominates_grid():
    source = DensitySpec("beta", (2.5, 1.5))
    target = DensitySpec("beta", (3.0, 4.0))
    diag = classify_shift(source, target)
    x = np.linspace(1e-6, 1.0 - 1e-6, 100_000)
    grid_max = float(analytic_ratio(source, target, x).max())
    assert grid_max <= diag.alpha_bound * (1.0 + 1e-6)
    # normal uniform case too
    nsrc = DensitySpec("normal", (0.0, 1.0))
    ntgt = DensitySpec("normal", (0.5, 0.5))
    ndiag = classify_shift(nsrc, ntgt)
    xg = np.linspace(-10.0, 10.0, 100_000)
    ngrid = float(analytic_ratio(nsrc, ntgt, xg).max())
    assert ngrid <= ndiag.alpha_bound * (1.0 + 1e-6)
    assert ngrid >= 0.99 * ndiag.alpha_bound  # the bound is attained


def test_normal_beta_sq_closed_form_vs_quadrature():
    source, target = NORMAL_PAIR
    diag = classify_shift(source, target)
    x = np.linspace(-15.0, 15.0, 400_001)
    dens_s = np.exp(source.logpdf(x))
    ratio = analytic_ratio(source, target, x)
    quad = float(np.trapezoid(ratio**2 * dens_s, x))
    assert diag.beta_sq == pytest.approx(quad, rel=1e-6)
