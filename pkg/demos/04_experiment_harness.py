"""Run a small config-driven sweep and print the grouped summary."""

from kernelshift.experiments import (
    ExperimentConfig,
    run_experiment,
    summarize,
    summary_to_csv,
)

config = ExperimentConfig({
    "scenario": {"id": "kqr1d", "case": "moment", "tau": 0.3, "r": 1},
    "loss": {"kind": "check", "tau": 0.3},
    "kernel": {"family": "gaussian", "bandwidth": "median"},
    "sweep": {"axis": "lambda", "grid": [1e-4, 1e-3]},
    "fixed": {"n": 200, "m": 400},
    "estimators": ["unweighted", "tirw_true"],
    "replicates": 5,
    "base_seed": 0,
    "timing": False,
})

rows = run_experiment(config)
print(f"{len(rows)} result rows; errors: {sum(1 for r in rows if r.error)}")
print(summary_to_csv(summarize(rows)))
