"""Importance-ratio machinery: analytic density ratios, KLIEP estimation,
truncation, and boundedness classification of a source/target pair.

All analytic densities shift the first coordinate only; remaining
coordinates share a common law between source and target and cancel in
the ratio.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import betaln

from .kernels import KernelSpec, gram, median_heuristic


@dataclass(frozen=True)
class DensitySpec:
    """A univariate density for the shifted first coordinate."""

    family: str  # "normal" | "beta"
    params: tuple[float, float]  # (mu, sigma^2) or (a, b)

    def __post_init__(self):
        if self.family not in ("normal", "beta"):
            raise ValueError(f"unknown density family: {self.family!r}")
        p0, p1 = self.params
        if self.family == "normal" and p1 <= 0:
            raise ValueError("normal density requires sigma^2 > 0")
        if self.family == "beta" and (p0 <= 0 or p1 <= 0):
            raise ValueError("beta density requires positive shape parameters")

    def logpdf(self, x0: np.ndarray) -> np.ndarray:
        x0 = np.asarray(x0, dtype=float)
        if self.family == "normal":
            mu, var = self.params
            return -0.5 * np.log(2.0 * np.pi * var) - (x0 - mu) ** 2 / (2.0 * var)
        a, b = self.params
        if np.any(x0 <= 0.0) or np.any(x0 >= 1.0):
            raise ValueError("beta density support is (0, 1)")
        return (a - 1.0) * np.log(x0) + (b - 1.0) * np.log1p(-x0) - betaln(a, b)

    def to_dict(self) -> dict:
        return {"family": self.family, "params": [float(p) for p in self.params]}

    @classmethod
    def from_dict(cls, d: dict) -> "DensitySpec":
        return cls(family=d["family"], params=tuple(d["params"]))


@dataclass
class RatioModel:
    """Importance-ratio representation.

    kind: "analytic" (source/target DensitySpec pair), "kliep"
    (nonnegative kernel expansion on basis points), or "constant_one".
    truncation: optional cap gamma applied by ratio_eval.
    """

    kind: str
    source: DensitySpec | None = None
    target: DensitySpec | None = None
    basis_points: np.ndarray | None = None
    coeffs: np.ndarray | None = None
    kernel: KernelSpec | None = None
    truncation: float | None = None
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("analytic", "kliep", "constant_one"):
            raise ValueError(f"unknown ratio kind: {self.kind!r}")
        if self.kind == "analytic" and (self.source is None or self.target is None):
            raise ValueError("analytic ratio requires source and target densities")
        if self.kind == "kliep":
            if self.basis_points is None or self.coeffs is None or self.kernel is None:
                raise ValueError("kliep ratio requires basis points, coeffs, kernel")
            if np.any(np.asarray(self.coeffs) < 0):
                raise ValueError("kliep coefficients must be nonnegative")
        if self.truncation is not None and self.truncation <= 0:
            raise ValueError("truncation level must be positive")

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "truncation": self.truncation}
        if self.kind == "analytic":
            d["source"] = self.source.to_dict()
            d["target"] = self.target.to_dict()
        elif self.kind == "kliep":
            d["basis_points"] = np.asarray(self.basis_points).tolist()
            d["coeffs"] = np.asarray(self.coeffs).tolist()
            d["kernel"] = self.kernel.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RatioModel":
        kind = d["kind"]
        if kind == "analytic":
            return cls(
                kind=kind,
                source=DensitySpec.from_dict(d["source"]),
                target=DensitySpec.from_dict(d["target"]),
                truncation=d.get("truncation"),
            )
        if kind == "kliep":
            return cls(
                kind=kind,
                basis_points=np.asarray(d["basis_points"], dtype=float),
                coeffs=np.asarray(d["coeffs"], dtype=float),
                kernel=KernelSpec.from_dict(d["kernel"]),
                truncation=d.get("truncation"),
            )
        return cls(kind="constant_one", truncation=d.get("truncation"))


@dataclass(frozen=True)
class ShiftDiagnostics:
    classification: str  # uniformly_bounded | moment_bounded_only | unbounded_second_moment
    alpha_bound: float | None = None  # sup ratio, when finite
    beta_sq: float | None = None  # E_S[ratio^2], when finite


# ---------------------------------------------------------------------------
# analytic ratios
# ---------------------------------------------------------------------------

def _first_coord(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        return x[None]
    if x.ndim == 1:
        return x
    return x[:, 0]


def analytic_ratio(source: DensitySpec, target: DensitySpec, x) -> np.ndarray:
    """Pointwise density ratio target/source of the first coordinate."""
    x0 = _first_coord(x)
    return np.exp(target.logpdf(x0) - source.logpdf(x0))


def ratio_raw(model: RatioModel, X) -> np.ndarray:
    """Untruncated ratio values at the rows of X."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if model.kind == "constant_one":
        return np.ones(X.shape[0])
    if model.kind == "analytic":
        return analytic_ratio(model.source, model.target, X)
    Kb = gram(model.kernel, X, model.basis_points)
    return Kb @ np.asarray(model.coeffs, dtype=float)


def ratio_eval(model: RatioModel, x) -> np.ndarray:
    """Ratio at x, capped at the model's truncation level when present."""
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    vals = ratio_raw(model, np.atleast_1d(x))
    if model.truncation is not None:
        vals = np.minimum(vals, model.truncation)
    return float(vals[0]) if scalar and vals.shape[0] == 1 else vals


def truncation_level(n: int, beta_sq: float) -> float:
    """Theoretical truncation level sqrt(n * beta^2)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if beta_sq < 1:
        raise ValueError("beta_sq must be >= 1")
    return float(np.sqrt(n * beta_sq))


def estimate_beta_sq(model: RatioModel, source_x) -> float:
    """Sample mean of the squared untruncated ratio over source points."""
    source_x = np.asarray(source_x, dtype=float)
    if source_x.shape[0] < 2:
        raise ValueError("need at least 2 source points")
    vals = ratio_raw(model, source_x)
    return float(np.mean(vals**2))


# ---------------------------------------------------------------------------
# KLIEP
# ---------------------------------------------------------------------------

def _farthest_point_subset(points: np.ndarray, b: int) -> np.ndarray:
    """Deterministic k-center style subset: start from the point farthest
    from the centroid, then greedily add the point farthest from the
    current subset. Covers extremes, which matters when the true ratio is
    largest in a tail of the target sample."""
    m = points.shape[0]
    if b >= m:
        return points
    centroid = points.mean(axis=0)
    first = int(np.argmax(((points - centroid) ** 2).sum(axis=1)))
    chosen = [first]
    min_d2 = ((points - points[first]) ** 2).sum(axis=1)
    for _ in range(b - 1):
        nxt = int(np.argmax(min_d2))
        chosen.append(nxt)
        min_d2 = np.minimum(min_d2, ((points - points[nxt]) ** 2).sum(axis=1))
    return points[np.array(chosen)]


def kliep_fit(
    source_x,
    target_x,
    b: int | None = None,
    kernel: KernelSpec | None = None,
    tol: float = 1e-10,
    max_iter: int = 50_000,
) -> RatioModel:
    """Fit a nonnegative kernel-expansion ratio by multiplicative
    (exponentiated-gradient) ascent on the target log-likelihood under the
    source-sample normalization (1/n) sum_i g(x_i^S) = 1.

    Substituting beta_k = bn_k * alpha_k (bn the normalization vector)
    turns the constraint set into the probability simplex, on which the
    multiplicative update with a backtracking step is monotone and
    satisfies the normalization exactly at every iterate. Basis points are
    a deterministic farthest-point subset of the target sample.
    """
    source_x = np.asarray(source_x, dtype=float)
    target_x = np.asarray(target_x, dtype=float)
    if source_x.ndim == 1:
        source_x = source_x[:, None]
    if target_x.ndim == 1:
        target_x = target_x[:, None]
    n, m = source_x.shape[0], target_x.shape[0]
    if n < 2 or m < 2:
        raise ValueError("need at least 2 source and 2 target points")
    if b is None:
        b = min(100, m)
    if b > m:
        raise ValueError("basis count b cannot exceed the target sample size")
    if kernel is None:
        kernel = KernelSpec("gaussian", bandwidth=median_heuristic(target_x))

    basis = _farthest_point_subset(target_x, b)
    b = basis.shape[0]

    A = gram(kernel, target_x, basis)  # m x b, likelihood term
    bn = gram(kernel, source_x, basis).mean(axis=0)  # normalization vector

    if np.any(bn <= 0):
        raise ValueError(
            "some basis kernel column is numerically zero over the source "
            "sample; increase the kernel bandwidth"
        )

    M = A / bn  # objective in beta: mean log(M @ beta), beta on the simplex

    def objective(beta):
        g = M @ beta
        if np.any(g <= 0):
            return -np.inf, g
        return float(np.mean(np.log(g))), g

    beta = np.full(b, 1.0 / b)
    obj, g = objective(beta)
    if np.isneginf(obj):
        raise ValueError(
            "estimated ratio is numerically zero at some target point; "
            "increase the kernel bandwidth"
        )
    step = 1.0
    iterations = 0
    for _ in range(max_iter):
        iterations += 1
        grad = M.T @ (1.0 / g) / m
        improved = False
        while step >= 1e-16:
            logb = np.log(beta + 1e-300) + step * grad
            logb -= logb.max()
            trial = np.exp(logb)
            trial /= trial.sum()
            obj_trial, g_trial = objective(trial)
            if obj_trial > obj:
                improved = True
                break
            step *= 0.5
        if not improved:
            break
        gain = obj_trial - obj
        beta, obj, g = trial, obj_trial, g_trial
        step *= 2.0
        if gain < tol:
            break

    alpha = beta / bn
    model = RatioModel(
        kind="kliep",
        basis_points=basis,
        coeffs=alpha,
        kernel=kernel,
        diagnostics={"objective": obj, "iterations": iterations},
    )
    resid = abs(float(ratio_raw(model, source_x).mean()) - 1.0)
    if resid > 1e-6:
        raise ValueError(f"KLIEP normalization residual {resid:.3e} exceeds 1e-6")
    return model


# ---------------------------------------------------------------------------
# boundedness classification
# ---------------------------------------------------------------------------

def _normal_diag(source: DensitySpec, target: DensitySpec) -> ShiftDiagnostics:
    mu_s, var_s = source.params
    mu_t, var_t = target.params
    uniform = var_t < var_s or (var_t == var_s and mu_t == mu_s)
    alpha_bound = None
    if uniform:
        if var_t == var_s:
            alpha_bound = 1.0
        else:
            # log ratio is a concave quadratic; maximize in closed form
            a2 = 0.5 / var_s - 0.5 / var_t
            a1 = mu_t / var_t - mu_s / var_s
            a0 = (
                0.5 * np.log(var_s / var_t)
                + mu_s**2 / (2.0 * var_s)
                - mu_t**2 / (2.0 * var_t)
            )
            x_star = -a1 / (2.0 * a2)
            alpha_bound = float(np.exp(a2 * x_star**2 + a1 * x_star + a0))
    # E_S[ratio^2] = int rho_T^2 / rho_S; finite iff 2/var_t - 1/var_s > 0
    a = 1.0 / var_t - 0.5 / var_s
    if a <= 0:
        if uniform:  # uniform boundedness implies a finite second moment
            return ShiftDiagnostics("uniformly_bounded", alpha_bound, None)
        return ShiftDiagnostics("unbounded_second_moment")
    bb = 2.0 * mu_t / var_t - mu_s / var_s
    cc = mu_s**2 / (2.0 * var_s) - mu_t**2 / var_t
    const = np.sqrt(var_s) / (2.0 * np.pi * var_t) * np.sqrt(2.0 * np.pi)
    beta_sq = float(const * np.sqrt(np.pi / a) * np.exp(bb**2 / (4.0 * a) + cc))
    cls = "uniformly_bounded" if uniform else "moment_bounded_only"
    return ShiftDiagnostics(cls, alpha_bound, beta_sq)


def _beta_diag(source: DensitySpec, target: DensitySpec) -> ShiftDiagnostics:
    a_s, b_s = source.params
    a_t, b_t = target.params
    p = a_t - a_s
    q = b_t - b_s
    uniform = p >= 0 and q >= 0
    alpha_bound = None
    if uniform:
        logc = betaln(a_s, b_s) - betaln(a_t, b_t)
        if p + q == 0:
            alpha_bound = float(np.exp(logc))
        else:
            x_star = p / (p + q)
            with np.errstate(divide="ignore"):
                val = p * np.log(x_star) if p > 0 else 0.0
                val += q * np.log1p(-x_star) if q > 0 else 0.0
            alpha_bound = float(np.exp(logc + val))
    finite_m2 = (2.0 * a_t > a_s) and (2.0 * b_t > b_s)
    beta_sq = None
    if finite_m2:
        log_m2 = (
            betaln(2.0 * a_t - a_s, 2.0 * b_t - b_s)
            + betaln(a_s, b_s)
            - 2.0 * betaln(a_t, b_t)
        )
        beta_sq = float(np.exp(log_m2))
    if uniform:
        return ShiftDiagnostics("uniformly_bounded", alpha_bound, beta_sq)
    if finite_m2:
        return ShiftDiagnostics("moment_bounded_only", None, beta_sq)
    return ShiftDiagnostics("unbounded_second_moment")


def classify_shift(source: DensitySpec, target: DensitySpec) -> ShiftDiagnostics:
    """Classify a source/target pair by integrability of the ratio.

    Uniform boundedness and finiteness of E_S[ratio^2] are decided from
    first-principles tail comparisons, with closed-form alpha_bound and
    beta_sq where finite.
    """
    if source.family != target.family:
        raise ValueError("classify_shift requires densities of one family")
    if source.family == "normal":
        return _normal_diag(source, target)
    return _beta_diag(source, target)
