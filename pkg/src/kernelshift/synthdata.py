"""Seeded generators for the synthetic covariate-shift scenarios and the
real-data splitting rule.

Each scenario shifts only the first covariate between source and target;
for the 3-d Beta scenarios the remaining two coordinates are i.i.d.
uniform(0,1) under both distributions (the common law cancels in the
ratio). Covariates, responses, and split indicators draw from separate
seeded streams so that growing n extends a sample instead of reshuffling
it.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.stats import norm, t as student_t

from .ratio import DensitySpec, RatioModel, classify_shift

SCENARIO_IDS = ("kqr1d", "krr1d_s1", "krr3d_s2", "kqr3d_s4", "klr3d_s5")

# published density parameters per (scenario, boundedness case)
DENSITY_PARAMS = {
    ("kqr1d", "uniform"): (("normal", (0.0, 0.4)), ("normal", (0.5, 0.3))),
    ("kqr1d", "moment"): (("normal", (0.0, 0.3)), ("normal", (1.0, 0.5))),
    ("krr1d_s1", "uniform"): (("normal", (0.0, 0.5)), ("normal", (0.8, 0.3))),
    ("krr1d_s1", "moment"): (("normal", (0.0, 0.3)), ("normal", (1.5, 0.5))),
    ("krr3d_s2", "uniform"): (("beta", (2.5, 1.5)), ("beta", (3.0, 4.0))),
    ("krr3d_s2", "moment"): (("beta", (4.0, 1.0)), ("beta", (3.0, 6.0))),
    ("kqr3d_s4", "uniform"): (("beta", (2.5, 1.5)), ("beta", (3.0, 6.0))),
    ("kqr3d_s4", "moment"): (("beta", (5.5, 1.5)), ("beta", (3.0, 6.0))),
    ("klr3d_s5", "uniform"): (("beta", (2.5, 2.0)), ("beta", (3.0, 4.0))),
    ("klr3d_s5", "moment"): (("beta", (4.0, 1.0)), ("beta", (3.0, 6.0))),
}


@dataclass(frozen=True)
class Scenario:
    id: str
    case: str  # "uniform" | "moment" (the published boundedness label)
    source_density: DensitySpec
    target_density: DensitySpec
    noise: dict
    dim: int

    @property
    def task(self) -> str:
        if self.id.startswith("krr"):
            return "regression"
        if self.id.startswith("kqr"):
            return "quantile"
        return "classification"

    def classifier_verdict(self) -> str:
        """Boundedness classification derived from the densities themselves;
        may disagree with the published case label (recorded, not trusted)."""
        return classify_shift(self.source_density, self.target_density).classification


def make_scenario(scenario_id: str, case: str, tau: float = 0.3, r: float | None = None) -> Scenario:
    """Build a scenario from the published parameter tables.

    tau and r apply to the quantile scenarios only: r=0 is the
    homoscedastic configuration, r=1 the heteroscedastic one.
    """
    if scenario_id not in SCENARIO_IDS:
        raise ValueError(f"unknown scenario id: {scenario_id!r}")
    if case not in ("uniform", "moment"):
        raise ValueError(f"unknown boundedness case: {case!r}")
    (sf, sp), (tf, tp) = DENSITY_PARAMS[(scenario_id, case)]
    source = DensitySpec(sf, sp)
    target = DensitySpec(tf, tp)
    dim = 1 if scenario_id.endswith("1d") or scenario_id == "krr1d_s1" else 3
    if scenario_id == "kqr1d":
        if r is None:
            r = 1.0
        sigma = 0.5 if r == 0 else 0.3
        noise = {"tau": tau, "r": float(r), "sigma": sigma}
    elif scenario_id == "kqr3d_s4":
        if r is None:
            r = 1.0
        noise = {"tau": tau, "r": float(r), "sigma": 0.3, "df": 4}
    elif scenario_id == "krr1d_s1":
        noise = {"sigma": 0.05}
    elif scenario_id == "krr3d_s2":
        noise = {"sigma": 0.3}
    else:
        noise = {}
    return Scenario(scenario_id, case, source, target, noise, dim)


@dataclass
class Dataset:
    source_x: np.ndarray
    source_y: np.ndarray
    target_x: np.ndarray
    target_y: np.ndarray | None = None
    truth_f: Callable[[np.ndarray], np.ndarray] | None = None
    truth_ratio: RatioModel | None = None
    scenario: Scenario | None = None
    meta: dict = field(default_factory=dict)


def _f0(scenario_id: str, X: np.ndarray) -> np.ndarray:
    x0 = X[:, 0]
    if scenario_id == "kqr1d":
        return np.sin(np.pi * x0)
    if scenario_id == "krr1d_s1":
        out = np.zeros_like(x0)
        nz = x0 != 0.0
        out[nz] = np.exp(-1.0 / x0[nz] ** 2)
        return out
    if scenario_id == "krr3d_s2":
        return np.sin(2.0 * np.pi * x0) - np.exp(-X[:, 1] ** 2 - X[:, 2] ** 2)
    if scenario_id == "kqr3d_s4":
        return np.sin(1.5 * np.pi * x0) - np.exp(-X[:, 1] ** 2 - X[:, 2] ** 2)
    # klr3d_s5 log-odds
    return -(x0**2) + 3.0 * np.sin(3.0 * np.pi * x0) + np.exp(X[:, 1] ** 2 - X[:, 2] ** 2)


def _draw_covariates(density: DensitySpec, dim: int, n: int, seed_seq) -> np.ndarray:
    rng_x0 = np.random.default_rng(seed_seq[0])
    if density.family == "normal":
        mu, var = density.params
        x0 = rng_x0.normal(mu, np.sqrt(var), size=n)
    else:
        a, b = density.params
        x0 = rng_x0.beta(a, b, size=n)
    if dim == 1:
        return x0[:, None]
    rng_rest = np.random.default_rng(seed_seq[1])
    rest = rng_rest.uniform(0.0, 1.0, size=(n, dim - 1))
    return np.column_stack([x0, rest])


def _draw_responses(s: Scenario, X: np.ndarray, seed) -> np.ndarray:
    rng = np.random.default_rng(seed)
    n = X.shape[0]
    f0 = _f0(s.id, X)
    if s.id in ("krr1d_s1", "krr3d_s2"):
        return f0 + s.noise["sigma"] * rng.standard_normal(n)
    if s.id == "kqr1d":
        tau, r, sigma = s.noise["tau"], s.noise["r"], s.noise["sigma"]
        eps = rng.standard_normal(n)
        scale = 1.0 + r * (X[:, 0] - 0.5) ** 2
        return f0 + scale * sigma * (eps - norm.ppf(tau))
    if s.id == "kqr3d_s4":
        tau, r, sigma, df = s.noise["tau"], s.noise["r"], s.noise["sigma"], s.noise["df"]
        eps = rng.standard_t(df, size=n)
        scale = 1.0 + r * X[:, 0]
        return f0 + scale * sigma * (eps - student_t.ppf(tau, df))
    # klr3d_s5: labels in {-1, +1}
    p1 = 1.0 / (1.0 + np.exp(-f0))
    u = rng.uniform(size=n)
    return np.where(u < p1, 1.0, -1.0)


def generate(s: Scenario, n: int, m: int, seed: int) -> Dataset:
    """Draw a seeded dataset: n source pairs, m target pairs, plus truth
    handles (f* evaluator and the analytic ratio model)."""
    if n < 1 or m < 1:
        raise ValueError("n and m must be >= 1")
    children = np.random.SeedSequence(seed).spawn(6)
    source_x = _draw_covariates(s.source_density, s.dim, n, children[0].spawn(2))
    target_x = _draw_covariates(s.target_density, s.dim, m, children[1].spawn(2))
    source_y = _draw_responses(s, source_x, children[2])
    target_y = _draw_responses(s, target_x, children[3])
    truth_ratio = RatioModel(kind="analytic", source=s.source_density, target=s.target_density)

    def truth_f(X, _sid=s.id):
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        return _f0(_sid, X)

    return Dataset(
        source_x=source_x,
        source_y=source_y,
        target_x=target_x,
        target_y=target_y,
        truth_f=truth_f,
        truth_ratio=truth_ratio,
        scenario=s,
        meta={"seed": int(seed), "n": int(n), "m": int(m)},
    )


# ---------------------------------------------------------------------------
# real-data ingestion and covariate-shift splitting
# ---------------------------------------------------------------------------

@dataclass
class LabeledTable:
    features: np.ndarray  # N x d, standardized when requested
    labels: np.ndarray  # in {-1, +1}
    feature_names: list[str]
    label_column: str


def load_csv(
    path,
    label_column: str,
    positive_label: str,
    standardize: bool = True,
) -> LabeledTable:
    """Load a headered CSV of numeric features plus one label column.

    Labels map to +1 for positive_label and -1 for every other observed
    value (exactly two label values are required). Standardization uses
    the 1/(N-1) variance convention on the full table.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        if label_column not in header:
            raise ValueError(f"{path}: missing label column {label_column!r}")
        label_idx = header.index(label_column)
        feature_names = [h for i, h in enumerate(header) if i != label_idx]
        feats, labels = [], []
        for row_no, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise ValueError(f"{path}: row {row_no} has {len(row)} fields, expected {len(header)}")
            vals = []
            for i, cell in enumerate(row):
                if i == label_idx:
                    continue
                cell = cell.strip()
                if cell == "":
                    raise ValueError(f"{path}: missing value at row {row_no}, column {header[i]!r}")
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise ValueError(
                        f"{path}: non-numeric value {cell!r} at row {row_no}, column {header[i]!r}"
                    ) from None
            feats.append(vals)
            labels.append(row[label_idx].strip())
    if not feats:
        raise ValueError(f"{path}: no data rows")
    X = np.asarray(feats, dtype=float)
    observed = sorted(set(labels))
    if positive_label not in observed:
        raise ValueError(f"{path}: positive label {positive_label!r} not found (saw {observed})")
    if len(observed) != 2:
        raise ValueError(f"{path}: expected exactly 2 label values, saw {observed}")
    y = np.where(np.asarray(labels) == positive_label, 1.0, -1.0)
    if standardize:
        mean = X.mean(axis=0)
        sd = X.std(axis=0, ddof=1)
        if np.any(sd == 0):
            bad = feature_names[int(np.argmax(sd == 0))]
            raise ValueError(f"{path}: constant feature column {bad!r} cannot be standardized")
        X = (X - mean) / sd
    return LabeledTable(X, y, feature_names, label_column)


def covariate_split(table: LabeledTable, ell: float, seed: int):
    """Split rows into source/target by P(target | x) = min(1, (x0 - c)^2 / ell)
    with c the minimum of the first covariate. Smaller ell shifts more
    rows into the target set."""
    if ell <= 0:
        raise ValueError("ell must be positive")
    x0 = table.features[:, 0]
    c = float(x0.min())
    p_target = np.minimum(1.0, (x0 - c) ** 2 / ell)
    rng = np.random.default_rng(seed)
    s = rng.uniform(size=x0.shape[0]) < p_target
    if not np.any(s) or np.all(s):
        raise ValueError(
            "degenerate split: one side is empty; try a different shift level ell"
        )
    src = LabeledTable(table.features[~s], table.labels[~s], table.feature_names, table.label_column)
    tgt = LabeledTable(table.features[s], table.labels[s], table.feature_names, table.label_column)
    return src, tgt


def write_xy_csv(path, X: np.ndarray, y: np.ndarray | None):
    """Write covariates (and optionally a response column) with the
    header x0..x{d-1}[,y]."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    cols = [f"x{i}" for i in range(X.shape[1])]
    if y is not None:
        cols.append("y")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(cols)
        for i in range(X.shape[0]):
            row = [repr(float(v)) for v in X[i]]
            if y is not None:
                row.append(repr(float(y[i])))
            writer.writerow(row)


def read_xy_csv(path, expect_y: bool | None = None):
    """Read a CSV written by write_xy_csv; returns (X, y-or-None)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        has_y = header[-1] == "y"
        if expect_y is True and not has_y:
            raise ValueError(f"{path}: expected a response column 'y'")
        rows = [[float(c) for c in row] for row in reader]
    arr = np.asarray(rows, dtype=float)
    if arr.size == 0:
        raise ValueError(f"{path}: no data rows")
    if has_y:
        return arr[:, :-1], arr[:, -1]
    return arr, None
