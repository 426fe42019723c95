"""Config-driven experiment harness: sweeps over lambda, n, m, or the
real-data shift level, with seeded replicates and CSV output.

Per-replicate datasets are shared across estimator variants so that
estimator contrasts are paired. Every run can emit a fully resolved copy
of its configuration for reproducibility.
"""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .estimators import FitConfig, fit
from .kernels import KernelSpec, median_heuristic
from .losses import LossSpec
from .metrics import excess_risk_empirical, misclassification, mse_target
from .model_selection import configs_for_gammas, make_cv_plan, select
from .ratio import (
    RatioModel,
    classify_shift,
    estimate_beta_sq,
    kliep_fit,
    ratio_raw,
    truncation_level,
)
from .solvers import SolverError
from .synthdata import Dataset, covariate_split, generate, load_csv, make_scenario

CSV_HEADER = [
    "scenario", "estimator", "loss", "n", "m", "lambda", "gamma",
    "replicate", "seed", "mse", "excess_risk", "misclassification",
    "fit_seconds", "error",
]

ESTIMATOR_VARIANTS = ("unweighted", "irw_true", "tirw_true", "irw_kliep", "tirw_kliep")
SWEEP_AXES = ("lambda", "n", "m", "ell")
GAMMA_RULES = ("theorem3", "iwcv_grid", "fixed")

DEFAULTS = {
    "replicates": 1,
    "base_seed": 0,
    "estimators": ["unweighted", "tirw_true"],
    "gamma_rule": "theorem3",
    "gamma_fixed": None,
    "kliep_basis": 100,
    "iwcv_folds": 5,
    "solver": {"tol": 1e-6, "max_iter": 1_000_000},
    "timing": True,
}


@dataclass
class ResultRow:
    scenario: str
    estimator: str
    loss: str
    n: int
    m: int
    lam: float
    gamma: float | None
    replicate: int
    seed: int
    mse: float | None
    excess_risk: float | None
    misclassification: float | None
    fit_seconds: float
    error: str | None = None

    def to_csv(self) -> list[str]:
        def num(v):
            return "" if v is None else repr(float(v))

        return [
            self.scenario, self.estimator, self.loss,
            str(self.n), str(self.m), repr(float(self.lam)), num(self.gamma),
            str(self.replicate), str(self.seed),
            num(self.mse), num(self.excess_risk), num(self.misclassification),
            repr(float(self.fit_seconds)), self.error or "",
        ]


@dataclass
class ExperimentConfig:
    raw: dict = field(repr=False)

    def __post_init__(self):
        cfg = dict(self.raw)
        self.scenario = cfg.get("scenario")
        self.dataset = cfg.get("dataset")
        if (self.scenario is None) == (self.dataset is None):
            raise ValueError("config needs exactly one of 'scenario' or 'dataset'")
        self.loss = LossSpec.from_dict(cfg["loss"])
        kern = dict(cfg.get("kernel", {"family": "gaussian", "bandwidth": "median"}))
        self.kernel_is_median = kern.get("bandwidth") == "median"
        self.kernel = None if self.kernel_is_median else KernelSpec.from_dict(kern)
        self.kernel_raw = kern
        sweep = cfg.get("sweep")
        if sweep is None:
            raise ValueError("config requires a 'sweep' with one axis")
        self.sweep_axis = sweep["axis"]
        if self.sweep_axis not in SWEEP_AXES:
            raise ValueError(f"unknown sweep axis: {self.sweep_axis!r}")
        self.sweep_grid = list(sweep["grid"])
        if not self.sweep_grid or sorted(self.sweep_grid) != self.sweep_grid:
            raise ValueError("sweep grid must be nonempty and sorted")
        self.fixed = dict(cfg.get("fixed", {}))
        self.estimators = list(cfg.get("estimators", DEFAULTS["estimators"]))
        for e in self.estimators:
            if e not in ESTIMATOR_VARIANTS:
                raise ValueError(f"unknown estimator variant: {e!r}")
        self.replicates = int(cfg.get("replicates", DEFAULTS["replicates"]))
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        self.base_seed = int(cfg.get("base_seed", DEFAULTS["base_seed"]))
        self.gamma_rule = cfg.get("gamma_rule", DEFAULTS["gamma_rule"])
        if self.gamma_rule not in GAMMA_RULES:
            raise ValueError(f"unknown gamma rule: {self.gamma_rule!r}")
        self.gamma_fixed = cfg.get("gamma_fixed", DEFAULTS["gamma_fixed"])
        if self.gamma_rule == "fixed" and self.gamma_fixed is None:
            raise ValueError("gamma_rule 'fixed' requires gamma_fixed")
        self.kliep_basis = int(cfg.get("kliep_basis", DEFAULTS["kliep_basis"]))
        self.iwcv_folds = int(cfg.get("iwcv_folds", DEFAULTS["iwcv_folds"]))
        solver = {**DEFAULTS["solver"], **cfg.get("solver", {})}
        self.solver_tol = float(solver["tol"])
        self.solver_max_iter = int(solver["max_iter"])
        self.timing = bool(cfg.get("timing", DEFAULTS["timing"]))

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        return cls(json.loads(text))

    def resolved(self) -> dict:
        """The config with every default materialized."""
        out = {
            "loss": self.loss.to_dict(),
            "kernel": self.kernel_raw,
            "sweep": {"axis": self.sweep_axis, "grid": self.sweep_grid},
            "fixed": self.fixed,
            "estimators": self.estimators,
            "replicates": self.replicates,
            "base_seed": self.base_seed,
            "gamma_rule": self.gamma_rule,
            "gamma_fixed": self.gamma_fixed,
            "kliep_basis": self.kliep_basis,
            "iwcv_folds": self.iwcv_folds,
            "solver": {"tol": self.solver_tol, "max_iter": self.solver_max_iter},
            "timing": self.timing,
        }
        if self.scenario is not None:
            out["scenario"] = self.scenario
        else:
            out["dataset"] = self.dataset
        return out

    def scenario_label(self) -> str:
        if self.scenario is not None:
            return f"{self.scenario['id']}/{self.scenario.get('case', 'uniform')}"
        return self.dataset["path"]


def replicate_seed(base_seed: int, replicate: int) -> int:
    return int(np.random.SeedSequence([base_seed, replicate]).generate_state(1)[0])


def _axis_values(cfg: ExperimentConfig, grid_value):
    fixed = cfg.fixed
    vals = {
        "n": fixed.get("n"),
        "m": fixed.get("m"),
        "lambda": fixed.get("lambda"),
        "ell": fixed.get("ell"),
    }
    vals[cfg.sweep_axis] = grid_value
    return vals


def _beta_sq_for(ratio: RatioModel, source_x, scenario=None) -> float:
    if ratio.kind == "analytic":
        diag = classify_shift(ratio.source, ratio.target)
        if diag.beta_sq is not None:
            return max(1.0, diag.beta_sq)
    return max(1.0, estimate_beta_sq(ratio, source_x))


def _select_gamma(cfg, data, fit_cfg, ratio, seed) -> float:
    n = data.source_x.shape[0]
    top = truncation_level(n, _beta_sq_for(ratio, data.source_x))
    if cfg.gamma_rule == "theorem3":
        return top
    if cfg.gamma_rule == "fixed":
        return float(cfg.gamma_fixed)
    # iwcv_grid: geometric candidates from the median fitted weight (heavy
    # truncation) up to the Theorem-3 level (truncation effectively off);
    # each candidate is scored with its own truncated weights
    phi = ratio_raw(ratio, data.source_x)
    lo = max(float(np.median(phi)) / 8.0, 1e-6)
    gammas = np.geomspace(lo, max(top, 2.0 * lo), 10)
    plan = make_cv_plan(n, folds=cfg.iwcv_folds, seed=seed)
    candidates = configs_for_gammas(fit_cfg, gammas)
    report = select(data, candidates, ratio, plan, truncate_validation=True)
    return float(report.grid[report.chosen].truncation_level)


def _evaluate(model, data: Dataset, loss: LossSpec):
    mse = exc = mis = None
    if data.truth_f is not None:
        mse = mse_target(model, data.target_x, data.truth_f)
        if data.target_y is not None:
            exc = excess_risk_empirical(model, data.target_x, data.target_y, loss, data.truth_f)
    if loss.is_classification and data.target_y is not None:
        mis = misclassification(model, data.target_x, data.target_y)
    return mse, exc, mis


def _run_cell(cfg: ExperimentConfig, grid_value, replicate: int) -> list[ResultRow]:
    seed = replicate_seed(cfg.base_seed, replicate)
    vals = _axis_values(cfg, grid_value)
    lam = float(vals["lambda"])

    if cfg.scenario is not None:
        sc = cfg.scenario
        scenario = make_scenario(
            sc["id"], sc.get("case", "uniform"),
            tau=sc.get("tau", 0.3), r=sc.get("r"),
        )
        n, m = int(vals["n"]), int(vals["m"])
        data = generate(scenario, n, m, seed)
        label = cfg.scenario_label()
    else:
        ds = cfg.dataset
        table = load_csv(ds["path"], ds["label"], ds["positive"], ds.get("standardize", True))
        src, tgt = covariate_split(table, float(vals["ell"]), seed)
        data = Dataset(
            source_x=src.features, source_y=src.labels,
            target_x=tgt.features, target_y=tgt.labels,
        )
        n, m = src.features.shape[0], tgt.features.shape[0]
        label = cfg.scenario_label()

    kernel = cfg.kernel or KernelSpec("gaussian", bandwidth=median_heuristic(data.source_x))
    base_fit = FitConfig(
        loss=cfg.loss, kernel=kernel, lam=lam,
        solver_tol=cfg.solver_tol, solver_max_iter=cfg.solver_max_iter,
    )

    ratios: dict[str, RatioModel] = {}
    if any(v.endswith("_true") for v in cfg.estimators):
        if data.truth_ratio is None:
            raise ValueError("true-ratio variants require an analytic ratio")
        ratios["true"] = data.truth_ratio
    if any(v.endswith("_kliep") for v in cfg.estimators):
        ratios["kliep"] = kliep_fit(
            data.source_x, data.target_x,
            b=min(cfg.kliep_basis, data.target_x.shape[0]),
        )

    rows = []
    for variant in cfg.estimators:
        gamma = None
        t0 = time.perf_counter()
        error = None
        mse = exc = mis = None
        try:
            if variant == "unweighted":
                fc = base_fit
            else:
                weighting, source = variant.split("_")
                ratio = ratios[source]
                if weighting == "irw":
                    fc = replace(base_fit, weighting="irw")
                else:
                    gamma = _select_gamma(cfg, data, base_fit, ratio, seed)
                    fc = replace(base_fit, weighting="tirw", truncation_level=gamma)
            model = fit(data, fc, ratios.get(variant.split("_")[-1]) if variant != "unweighted" else None)
            mse, exc, mis = _evaluate(model, data, cfg.loss)
        except (SolverError, ValueError) as e:
            error = str(e)
        fit_seconds = time.perf_counter() - t0 if cfg.timing else 0.0
        rows.append(ResultRow(
            scenario=label, estimator=variant, loss=cfg.loss.kind,
            n=n, m=m, lam=lam, gamma=gamma, replicate=replicate, seed=seed,
            mse=mse, excess_risk=exc, misclassification=mis,
            fit_seconds=fit_seconds, error=error,
        ))
    return rows


def run_experiment(cfg: ExperimentConfig, threads: int = 1) -> list[ResultRow]:
    """Run every (grid point, replicate) cell; rows come back ordered by
    cell index regardless of worker count."""
    cells = [(g, r) for g in cfg.sweep_grid for r in range(cfg.replicates)]
    if threads > 1:
        from joblib import Parallel, delayed

        chunks = Parallel(n_jobs=threads)(
            delayed(_run_cell)(cfg, g, r) for g, r in cells
        )
    else:
        chunks = [_run_cell(cfg, g, r) for g, r in cells]
    return [row for chunk in chunks for row in chunk]


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow(row.to_csv())
    return buf.getvalue()


def rows_from_csv(text: str) -> list[ResultRow]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if header != CSV_HEADER:
        raise ValueError("unexpected result CSV header")

    def opt(v):
        return None if v == "" else float(v)

    out = []
    for rec in reader:
        out.append(ResultRow(
            scenario=rec[0], estimator=rec[1], loss=rec[2],
            n=int(rec[3]), m=int(rec[4]), lam=float(rec[5]), gamma=opt(rec[6]),
            replicate=int(rec[7]), seed=int(rec[8]),
            mse=opt(rec[9]), excess_risk=opt(rec[10]), misclassification=opt(rec[11]),
            fit_seconds=float(rec[12]), error=rec[13] or None,
        ))
    return out


def summarize(rows) -> list[dict]:
    """Mean and standard error per (estimator, grid point) group."""
    rows = list(rows)
    if not rows:
        raise ValueError("no rows to summarize")
    groups: dict[tuple, list[ResultRow]] = {}
    for row in rows:
        key = (row.scenario, row.estimator, row.loss, row.n, row.m, row.lam)
        groups.setdefault(key, []).append(row)

    def stats(vals):
        vals = [v for v in vals if v is not None]
        if not vals:
            return None, None
        arr = np.asarray(vals, dtype=float)
        mean = float(arr.mean())
        stderr = float(arr.std(ddof=1) / np.sqrt(arr.size)) if arr.size > 1 else 0.0
        return mean, stderr

    out = []
    for key in sorted(groups):
        grp = groups[key]
        scenario, estimator, loss, n, m, lam = key
        rec = {
            "scenario": scenario, "estimator": estimator, "loss": loss,
            "n": n, "m": m, "lambda": lam, "count": len(grp),
            "errors": sum(1 for g in grp if g.error),
        }
        for name in ("mse", "excess_risk", "misclassification"):
            mean, stderr = stats([getattr(g, name) for g in grp])
            rec[f"{name}_mean"] = mean
            rec[f"{name}_stderr"] = stderr
        out.append(rec)
    return out


def summary_to_csv(summary: list[dict]) -> str:
    buf = io.StringIO()
    cols = list(summary[0].keys())
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(cols)
    for rec in summary:
        writer.writerow(["" if rec[c] is None else rec[c] for c in cols])
    return buf.getvalue()
