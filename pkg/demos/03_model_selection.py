"""Pick lambda by importance-weighted cross validation on a shifted
regression scenario."""

from dataclasses import replace

import kernelshift as ks

scenario = ks.make_scenario("krr1d_s1", "uniform")
data = ks.generate(scenario, n=300, m=500, seed=1)

kernel = ks.KernelSpec("gaussian", bandwidth=ks.median_heuristic(data.source_x))
base = ks.FitConfig(loss=ks.LossSpec("squared"), kernel=kernel, lam=1e-3)
grid = [replace(base, lam=lam) for lam in (1e-5, 1e-4, 1e-3, 1e-2, 1e-1)]

plan = ks.make_cv_plan(300, folds=5, seed=1)
report = ks.select(data, grid, data.truth_ratio, plan)

for cfg, risk in zip(report.grid, report.risks):
    marker = " <- chosen" if cfg is report.grid[report.chosen] else ""
    print(f"lambda={cfg.lam:.0e}  iwcv risk={risk:.5f}{marker}")

best = ks.fit(data, report.grid[report.chosen], data.truth_ratio)
print(f"target MSE at the chosen lambda: "
      f"{ks.mse_target(best, data.target_x, data.truth_f):.5f}")
