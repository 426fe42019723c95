"""Command-line interface.

Subcommands: gen, ratio, fit, predict, select, experiment, rates, split,
summarize, repro. Exit codes: 0 success, 1 usage error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from .estimators import FitConfig, FittedModel, classify, fit, predict
from .experiments import (
    ExperimentConfig,
    rows_from_csv,
    rows_to_csv,
    run_experiment,
    summarize,
    summary_to_csv,
)
from .kernels import KernelSpec, median_heuristic
from .losses import LossSpec
from .metrics import rate_slope
from .model_selection import make_cv_plan, select
from .ratio import DensitySpec, RatioModel, kliep_fit
from .repro import REGISTRY, verify_repro
from .solvers import SolverError
from .synthdata import (
    covariate_split,
    generate,
    load_csv,
    make_scenario,
    read_xy_csv,
    write_xy_csv,
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse variant that raises instead of exiting with status 2."""

    def error(self, message):
        raise UsageError(message)


def _read_features(path):
    X, _y = read_xy_csv(path)
    return X


def _kernel_from_args(bandwidth: str, X) -> KernelSpec:
    if bandwidth == "median":
        return KernelSpec("gaussian", bandwidth=median_heuristic(X))
    return KernelSpec("gaussian", bandwidth=float(bandwidth))


def _loss_from_args(args) -> LossSpec:
    if args.loss == "check":
        return LossSpec("check", tau=args.tau)
    if args.loss == "huber":
        return LossSpec("huber", huber_delta=args.huber_delta)
    return LossSpec(args.loss)


def _load_ratio(path) -> RatioModel:
    with open(path) as fh:
        return RatioModel.from_dict(json.load(fh))


# ---------------------------------------------------------------------------
# subcommand handlers
# ---------------------------------------------------------------------------

def _cmd_gen(args):
    scenario = make_scenario(args.scenario, args.case, tau=args.tau, r=args.r)
    data = generate(scenario, args.n, args.m, args.seed)
    os.makedirs(args.out, exist_ok=True)
    write_xy_csv(os.path.join(args.out, "source.csv"), data.source_x, data.source_y)
    write_xy_csv(os.path.join(args.out, "target.csv"), data.target_x, data.target_y)
    doc = {
        "id": scenario.id,
        "case": scenario.case,
        "noise": scenario.noise,
        "dim": scenario.dim,
        "task": scenario.task,
        "source_density": scenario.source_density.to_dict(),
        "target_density": scenario.target_density.to_dict(),
        "classifier_verdict": scenario.classifier_verdict(),
        "n": args.n,
        "m": args.m,
        "seed": args.seed,
    }
    with open(os.path.join(args.out, "scenario.json"), "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return 0


def _cmd_ratio(args):
    if args.method == "kliep":
        source_x = _read_features(args.source)
        target_x = _read_features(args.target)
        kernel = None
        if args.bandwidth != "median":
            kernel = KernelSpec("gaussian", bandwidth=float(args.bandwidth))
        model = kliep_fit(source_x, target_x, b=args.basis, kernel=kernel)
    else:
        source = DensitySpec.from_dict(json.loads(args.source_density))
        target = DensitySpec.from_dict(json.loads(args.target_density))
        model = RatioModel(kind="analytic", source=source, target=target)
    if args.gamma is not None:
        model.truncation = args.gamma
    with open(args.out, "w") as fh:
        json.dump(model.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return 0


def _cmd_fit(args):
    X, y = read_xy_csv(args.data, expect_y=True)
    cfg = FitConfig(
        loss=_loss_from_args(args),
        kernel=_kernel_from_args(args.bandwidth, X),
        lam=args.lam,
        weighting=args.weighting,
        truncation_level=args.gamma,
        solver_tol=args.tol,
        solver_max_iter=args.max_iter,
    )
    ratio = _load_ratio(args.ratio) if args.ratio else None
    model = fit((X, y), cfg, ratio)
    with open(args.out, "w") as fh:
        fh.write(model.to_json())
        fh.write("\n")
    return 0


def _cmd_predict(args):
    with open(args.model) as fh:
        model = FittedModel.from_json(fh.read())
    X = _read_features(args.data)
    vals = classify(model, X) if args.classify else predict(model, X)
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["yhat"])
        for v in vals:
            writer.writerow([repr(float(v))])
    return 0


def _cmd_select(args):
    X, y = read_xy_csv(args.data, expect_y=True)
    with open(args.grid) as fh:
        grid = [FitConfig.from_dict(d) for d in json.load(fh)]
    ratio = _load_ratio(args.ratio) if args.ratio else None
    plan = make_cv_plan(X.shape[0], folds=args.folds, seed=args.seed)
    report = select((X, y), grid, ratio, plan)
    doc = {
        "risks": report.risks,
        "chosen": report.chosen,
        "chosen_config": report.grid[report.chosen].to_dict(),
        "chosen_fold_risks": report.chosen_fold_risks,
        "errors": report.errors,
        "folds": args.folds,
        "seed": args.seed,
    }
    with open(args.out, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return 0


def _write_rows(rows, out, fmt):
    if fmt == "csv":
        with open(out, "w", newline="") as fh:
            fh.write(rows_to_csv(rows))
    else:
        with open(out, "w") as fh:
            json.dump([row.to_csv() for row in rows], fh, indent=2)
            fh.write("\n")


def _cmd_experiment(args):
    with open(args.config) as fh:
        cfg = ExperimentConfig(json.load(fh))
    rows = run_experiment(cfg, threads=args.threads)
    _write_rows(rows, args.out, args.format)
    base, _ = os.path.splitext(args.out)
    with open(base + ".resolved_config.json", "w") as fh:
        json.dump(cfg.resolved(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return 0


def _cmd_rates(args):
    n_grid = [int(v) for v in args.n_grid.split(",")]
    if sorted(n_grid) != n_grid or len(n_grid) < 3:
        raise UsageError("--n-grid must be sorted with at least 3 values")
    records = []
    for n in n_grid:
        lam = args.lam_scale * np.log(n) ** 2 / n
        cfg = ExperimentConfig({
            "scenario": {"id": args.scenario, "case": args.case},
            "loss": {"kind": "squared"},
            "kernel": {"family": "gaussian", "bandwidth": "median"},
            "sweep": {"axis": "lambda", "grid": [lam]},
            "fixed": {"n": n, "m": args.m},
            "estimators": [args.estimator],
            "replicates": args.replicates,
            "base_seed": args.seed,
            "timing": False,
        })
        rows = run_experiment(cfg, threads=args.threads)
        summary = summarize(rows)[0]
        records.append((n, lam, summary["mse_mean"], summary["mse_stderr"]))
    slope, _intercept = rate_slope([r[0] for r in records], [r[2] for r in records])
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["n", "lambda", "mse_mean", "mse_stderr", "slope"])
        for n, lam, mean, stderr in records:
            writer.writerow([n, repr(float(lam)), repr(float(mean)),
                             repr(float(stderr)), repr(float(slope))])
    return 0


def _cmd_split(args):
    table = load_csv(args.data, args.label, args.positive,
                     standardize=not args.no_standardize)
    src, tgt = covariate_split(table, args.ell, args.seed)
    os.makedirs(args.out, exist_ok=True)
    write_xy_csv(os.path.join(args.out, "source.csv"), src.features, src.labels)
    write_xy_csv(os.path.join(args.out, "target.csv"), tgt.features, tgt.labels)
    return 0


def _cmd_summarize(args):
    with open(args.rows) as fh:
        rows = rows_from_csv(fh.read())
    summary = summarize(rows)
    with open(args.out, "w", newline="") as fh:
        fh.write(summary_to_csv(summary))
    return 0


def _cmd_repro(args):
    if args.list:
        for figure_id in sorted(REGISTRY):
            entry = REGISTRY[figure_id]
            suffix = " (requires user data)" if entry.requires_user_data else ""
            print(f"{figure_id}: {entry.config_name}{suffix}")
        return 0
    if args.entry is None:
        raise UsageError("repro requires --entry or --list")
    if args.entry not in REGISTRY:
        raise UsageError(f"unknown repro entry {args.entry!r}; see --list")
    result = verify_repro(REGISTRY[args.entry], replicates=args.replicates,
                          threads=args.threads)
    if args.out and result.csv_text is not None:
        with open(args.out, "w", newline="") as fh:
            fh.write(result.csv_text)
    status = "SKIP" if result.skipped else ("PASS" if result.passed else "FAIL")
    print(f"{result.figure_id}: {status} — {result.message}")
    if result.stats:
        print(json.dumps(result.stats, indent=2, sort_keys=True, default=str))
    print(f"elapsed: {result.seconds:.1f}s", file=sys.stderr)
    if result.skipped:
        return 0
    return 0 if result.passed else 2


# ---------------------------------------------------------------------------
# parser construction
# ---------------------------------------------------------------------------

def build_parser() -> _Parser:
    parser = _Parser(prog="kernelshift", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic scenario dataset")
    p.add_argument("--scenario", required=True)
    p.add_argument("--case", default="uniform", choices=["uniform", "moment"])
    p.add_argument("--tau", type=float, default=0.3)
    p.add_argument("--r", type=float, default=None)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(handler=_cmd_gen)

    p = sub.add_parser("ratio", help="estimate or construct a density ratio")
    p.add_argument("--method", default="kliep", choices=["kliep", "analytic"])
    p.add_argument("--source", help="source covariate CSV (kliep)")
    p.add_argument("--target", help="target covariate CSV (kliep)")
    p.add_argument("--source-density", help="density JSON (analytic)")
    p.add_argument("--target-density", help="density JSON (analytic)")
    p.add_argument("--basis", type=int, default=None)
    p.add_argument("--bandwidth", default="median")
    p.add_argument("--gamma", type=float, default=None, help="truncation level")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_ratio)

    p = sub.add_parser("fit", help="fit an estimator on a source CSV")
    p.add_argument("--data", required=True, help="CSV with x0..x{d-1},y")
    p.add_argument("--loss", required=True,
                   choices=["squared", "check", "huber", "logistic", "hinge"])
    p.add_argument("--tau", type=float, default=0.5)
    p.add_argument("--huber-delta", type=float, default=1.0)
    p.add_argument("--bandwidth", default="median")
    p.add_argument("--lam", type=float, required=True)
    p.add_argument("--weighting", default="unweighted",
                   choices=["unweighted", "irw", "tirw"])
    p.add_argument("--ratio", default=None, help="ratio JSON for irw/tirw")
    p.add_argument("--gamma", type=float, default=None, help="tirw truncation level")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--max-iter", type=int, default=1_000_000)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_fit)

    p = sub.add_parser("predict", help="evaluate a fitted model on covariates")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--classify", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_predict)

    p = sub.add_parser("select", help="IWCV over a JSON grid of fit configs")
    p.add_argument("--data", required=True)
    p.add_argument("--grid", required=True, help="JSON array of fit configs")
    p.add_argument("--ratio", default=None)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_select)

    p = sub.add_parser("experiment", help="run a config-driven sweep to CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--format", default="csv", choices=["csv", "json"])
    p.set_defaults(handler=_cmd_experiment)

    p = sub.add_parser("rates", help="n-grid rate study with fitted slope")
    p.add_argument("--scenario", required=True)
    p.add_argument("--case", default="uniform", choices=["uniform", "moment"])
    p.add_argument("--n-grid", required=True, help="comma-separated, sorted")
    p.add_argument("--m", type=int, default=1000)
    p.add_argument("--replicates", type=int, default=20)
    p.add_argument("--lam-scale", type=float, default=1e-2,
                   help="lambda = scale * log(n)^2 / n")
    p.add_argument("--estimator", default="unweighted")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_rates)

    p = sub.add_parser("split", help="covariate-shift split of a labeled CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--label", required=True)
    p.add_argument("--positive", required=True)
    p.add_argument("--ell", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-standardize", action="store_true")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(handler=_cmd_split)

    p = sub.add_parser("summarize", help="group result rows into means and SEs")
    p.add_argument("--rows", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_summarize)

    p = sub.add_parser("repro", help="run a reproduction-registry entry")
    p.add_argument("--entry", default=None)
    p.add_argument("--replicates", type=int, default=None)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", default=None, help="optional rows CSV")
    p.add_argument("--list", action="store_true")
    p.set_defaults(handler=_cmd_repro)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    try:
        return args.handler(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (SolverError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
