"""Reproduction registry: binds every in-scope figure/table to a runnable
experiment config plus a qualitative pass/fail predicate.

Figures in the source material carry no numeric tables, so predicates
encode orderings and relative gaps with explicit thresholds; each
threshold is an operationalization of the stated qualitative claim, not
a published number.
"""

from __future__ import annotations

import importlib.resources
import os
import time
from dataclasses import dataclass, field

import numpy as np

from .experiments import ExperimentConfig, run_experiment, rows_to_csv

PREDICATE_TYPES = ("ordering", "relative_gap", "smoke")


@dataclass(frozen=True)
class ReproEntry:
    figure_id: str
    config_name: str  # packaged config file under kernelshift/configs/
    predicate: dict  # {"type": ..., ...}
    runtime_budget_seconds: float
    default_replicates: int
    requires_user_data: bool = False
    notes: str = ""

    def __post_init__(self):
        if self.predicate.get("type") not in PREDICATE_TYPES:
            raise ValueError(f"unknown predicate type: {self.predicate.get('type')!r}")


@dataclass
class ReproResult:
    figure_id: str
    passed: bool
    skipped: bool
    seconds: float
    stats: dict = field(default_factory=dict)
    message: str = ""
    csv_text: str | None = None


def load_config(config_name: str) -> ExperimentConfig:
    text = (
        importlib.resources.files("kernelshift")
        .joinpath("configs", config_name)
        .read_text()
    )
    return ExperimentConfig.from_json(text)


def _mse_or_mis(row):
    return row.mse if row.mse is not None else row.misclassification


def _group_means(rows, metric: str) -> dict[tuple[str, float], float]:
    """Mean metric per (estimator, lambda) over replicates."""
    groups: dict[tuple[str, float], list[float]] = {}
    for row in rows:
        val = getattr(row, metric) if metric != "auto" else _mse_or_mis(row)
        if val is None:
            continue
        groups.setdefault((row.estimator, row.lam), []).append(val)
    return {k: float(np.mean(v)) for k, v in groups.items()}


def _check_ordering(rows, pred) -> tuple[bool, dict, str]:
    metric = pred.get("metric", "mse")
    better, worse = pred["better"], pred["worse"]
    margin_se = float(pred.get("margin_se", 0.0))
    lams = sorted({r.lam for r in rows})
    at = pred.get("at_lambda")
    if at is not None:
        lams = [lam for lam in lams if lam == at]
        if not lams:
            return False, {}, f"no rows at lambda={at}"
    stats, ok = {}, True
    for lam in lams:
        b = [getattr(r, metric) for r in rows if r.estimator == better and r.lam == lam]
        w = [getattr(r, metric) for r in rows if r.estimator == worse and r.lam == lam]
        b = [v for v in b if v is not None]
        w = [v for v in w if v is not None]
        if not b or not w:
            return False, stats, f"missing {metric} values at lambda={lam}"
        diff = np.asarray(w, dtype=float) - np.asarray(b, dtype=float)
        mean_gap = float(diff.mean())
        se = float(diff.std(ddof=1) / np.sqrt(diff.size)) if diff.size > 1 else 0.0
        stats[lam] = {
            f"{better}_mean": float(np.mean(b)),
            f"{worse}_mean": float(np.mean(w)),
            "paired_gap": mean_gap,
            "paired_se": se,
        }
        ok = ok and mean_gap > margin_se * se
    msg = f"mean {metric}({better}) < mean {metric}({worse})" + (
        f" by > {margin_se} paired SE" if margin_se else ""
    )
    return ok, stats, msg + (": pass" if ok else ": fail")


def _check_relative_gap(rows, pred) -> tuple[bool, dict, str]:
    metric = pred.get("metric", "mse")
    a, b = pred["a"], pred["b"]
    threshold = float(pred["threshold"])
    means = _group_means(rows, metric)
    a_lams = {lam: v for (est, lam), v in means.items() if est == a}
    b_lams = {lam: v for (est, lam), v in means.items() if est == b}
    if not a_lams or not b_lams:
        return False, {}, f"missing rows for estimator {a!r} or {b!r}"
    lam_star = min(b_lams, key=b_lams.get)
    if pred.get("per_estimator_min", True):
        # each estimator evaluated at its own best grid point
        va, vb = min(a_lams.values()), min(b_lams.values())
    else:
        if lam_star not in a_lams:
            return False, {}, f"no rows for estimator {a!r} at lambda={lam_star}"
        va, vb = a_lams[lam_star], b_lams[lam_star]
    gap = abs(va - vb) / vb
    stats = {"lambda_star": lam_star, f"{a}_mean": va, f"{b}_mean": vb, "relative_gap": gap}
    ok = gap <= threshold
    return ok, stats, f"relative gap {gap:.3f} vs threshold {threshold}: " + ("pass" if ok else "fail")


def _check_smoke(rows, pred) -> tuple[bool, dict, str]:
    errors = [r for r in rows if r.error]
    ok = len(errors) == 0 and len(rows) > 0
    return ok, {"rows": len(rows), "errors": len(errors)}, (
        "smoke: pass" if ok else f"smoke: {len(errors)} cell errors"
    )


_CHECKS = {"ordering": _check_ordering, "relative_gap": _check_relative_gap, "smoke": _check_smoke}


def verify_repro(
    entry: ReproEntry,
    replicates: int | None = None,
    threads: int = 1,
) -> ReproResult:
    """Run the entry's experiment (at a possibly reduced replicate count)
    and evaluate its predicate; exceeding the runtime budget fails."""
    cfg = load_config(entry.config_name)
    if entry.requires_user_data:
        path = cfg.dataset["path"]
        if not os.path.exists(path):
            return ReproResult(
                figure_id=entry.figure_id,
                passed=False,
                skipped=True,
                seconds=0.0,
                message=f"skipped: requires a user-supplied CSV at {path!r}",
            )
    if replicates is None:
        replicates = entry.default_replicates
    if replicates != cfg.replicates:
        cfg = ExperimentConfig({**cfg.resolved(), "replicates": replicates})
    start = time.perf_counter()
    rows = run_experiment(cfg, threads=threads)
    seconds = time.perf_counter() - start
    ok, stats, message = _CHECKS[entry.predicate["type"]](rows, entry.predicate)
    if seconds > entry.runtime_budget_seconds:
        ok = False
        message += f"; budget exceeded ({seconds:.1f}s > {entry.runtime_budget_seconds}s)"
    return ReproResult(
        figure_id=entry.figure_id,
        passed=ok,
        skipped=False,
        seconds=seconds,
        stats=stats,
        message=message,
        csv_text=rows_to_csv(rows),
    )


def _ordering(better="tirw_true", worse="unweighted", metric="mse", margin_se=0.0, **kw):
    return {"type": "ordering", "better": better, "worse": worse, "metric": metric,
            "margin_se": margin_se, **kw}


REGISTRY: dict[str, ReproEntry] = {}


def _register(entry: ReproEntry):
    REGISTRY[entry.figure_id] = entry


_register(ReproEntry(
    "Smoke", "smoke.json", {"type": "smoke"}, 60.0, 1,
    notes="Trivial harness check: one tiny replicate runs without cell errors.",
))
_register(ReproEntry(
    "Fig2", "fig2.json",
    {"type": "relative_gap", "a": "tirw_true", "b": "unweighted", "metric": "mse",
     "threshold": 0.25},
    1800.0, 3,
    notes="Uniformly bounded KQR at large n: unweighted and TIRW curves nearly "
          "coincide; threshold 0.25 is an operationalization, not a published number.",
))
_register(ReproEntry(
    "Fig3", "fig3.json", _ordering(margin_se=0.0), 900.0, 10,
    notes="Moment-bounded KQR: TIRW with the true ratio beats unweighted in mean MSE.",
))
for case in ("uniform", "moment"):
    _register(ReproEntry(
        f"FigS1-{case}", f"figs1_{case}.json", _ordering(), 600.0, 10,
        notes="KRR, 1-d smooth scenario.",
    ))
    _register(ReproEntry(
        f"FigS2-{case}", f"figs2_{case}.json", _ordering(), 600.0, 10,
        notes="KRR, 3-d Beta-shift scenario.",
    ))
    _register(ReproEntry(
        f"FigS4-{case}", f"figs4_{case}.json", _ordering(), 900.0, 10,
        notes="KQR, 3-d Beta shift with heteroscedastic t noise.",
    ))
    _register(ReproEntry(
        f"FigS5-{case}", f"figs5_{case}.json",
        _ordering(metric="misclassification"), 900.0, 10,
        notes="KLR, 3-d Beta shift; metric is target misclassification.",
    ))
_register(ReproEntry(
    "FigS3", "figs3.json", _ordering(better="tirw_kliep"), 900.0, 10,
    notes="Moment-bounded KQR with the ratio estimated by KLIEP instead of "
          "the analytic truth.",
))
for ell in (6, 8, 10):
    _register(ReproEntry(
        f"Fig4-ell{ell}", f"fig4_ell{ell}.json", {"type": "smoke"}, 900.0, 10,
        requires_user_data=True,
        notes="KSVM on a user-supplied labeled CSV under the quadratic "
              f"covariate split with shift level ell={ell}.",
    ))
_register(ReproEntry(
    "Table2-row", "table2.json", {"type": "smoke"}, 900.0, 10,
    requires_user_data=True,
    notes="Accuracy table rows for a user-supplied dataset; reports mean "
          "misclassification with standard errors via the summarize command.",
))
