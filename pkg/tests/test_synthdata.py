"""Scenario construction, seeded generation, CSV I/O, and the
covariate-shift splitting rule."""

import numpy as np
import pytest

from kernelshift.ratio import ratio_raw
from kernelshift.synthdata import (
    DENSITY_PARAMS,
    SCENARIO_IDS,
    LabeledTable,
    covariate_split,
    generate,
    load_csv,
    make_scenario,
    read_xy_csv,
    write_xy_csv,
)


# ---------------------------------------------------------------------------
# scenarios
# ---------------------------------------------------------------------------

def test_scenario_table_covers_all_cases():
    for sid in SCENARIO_IDS:
        for case in ("uniform", "moment"):
            assert (sid, case) in DENSITY_PARAMS
            s = make_scenario(sid, case)
            assert s.dim in (1, 3)
            assert s.task in ("regression", "quantile", "classification")


def test_make_scenario_validation():
    with pytest.raises(ValueError):
        make_scenario("krr2d", "uniform")
    with pytest.raises(ValueError):
        make_scenario("kqr1d", "heavy")


def test_quantile_noise_configuration():
    hetero = make_scenario("kqr1d", "uniform", tau=0.3)
    assert hetero.noise["r"] == 1.0 and hetero.noise["sigma"] == 0.3
    homo = make_scenario("kqr1d", "uniform", tau=0.3, r=0)
    assert homo.noise["r"] == 0.0 and homo.noise["sigma"] == 0.5
    assert make_scenario("kqr3d_s4", "moment").noise["df"] == 4


def test_classifier_verdict_matches_published_for_s2():
    assert make_scenario("krr3d_s2", "uniform").classifier_verdict() == "uniformly_bounded"
    assert make_scenario("krr3d_s2", "moment").classifier_verdict() == "moment_bounded_only"


# ---------------------------------------------------------------------------
# generation
# ---------------------------------------------------------------------------

def test_generate_shapes_and_determinism():
    s = make_scenario("krr3d_s2", "uniform")
    d1 = generate(s, n=40, m=30, seed=5)
    d2 = generate(s, n=40, m=30, seed=5)
    assert d1.source_x.shape == (40, 3)
    assert d1.target_x.shape == (30, 3)
    assert d1.source_y.shape == (40,)
    assert np.array_equal(d1.source_x, d2.source_x)
    assert np.array_equal(d1.target_y, d2.target_y)
    d3 = generate(s, n=40, m=30, seed=6)
    assert not np.array_equal(d1.source_x, d3.source_x)


def test_generate_prefix_property():
    # growing n extends the sample rather than reshuffling it
    for sid in ("kqr1d", "krr3d_s2", "klr3d_s5"):
        s = make_scenario(sid, "uniform")
        small = generate(s, n=25, m=20, seed=9)
        big = generate(s, n=50, m=40, seed=9)
        assert np.array_equal(big.source_x[:25], small.source_x)
        assert np.array_equal(big.source_y[:25], small.source_y)
        assert np.array_equal(big.target_x[:20], small.target_x)


def test_generate_truth_handles():
    s = make_scenario("kqr1d", "moment")
    data = generate(s, n=50, m=50, seed=1)
    x0 = data.target_x[:, 0]
    assert np.allclose(data.truth_f(data.target_x), np.sin(np.pi * x0))
    # analytic truth ratio evaluates the published density pair
    w = ratio_raw(data.truth_ratio, data.source_x)
    assert np.all(w > 0)
    assert data.truth_ratio.source == s.source_density


def test_classification_labels_are_pm1():
    s = make_scenario("klr3d_s5", "moment")
    data = generate(s, n=100, m=100, seed=2)
    assert set(np.unique(data.source_y)) <= {-1.0, 1.0}
    assert set(np.unique(data.target_y)) <= {-1.0, 1.0}


def test_beta_covariates_in_unit_interval():
    s = make_scenario("kqr3d_s4", "uniform")
    data = generate(s, n=200, m=200, seed=3)
    assert np.all(data.source_x > 0.0) and np.all(data.source_x < 1.0)


def test_generate_validation():
    s = make_scenario("kqr1d", "uniform")
    with pytest.raises(ValueError):
        generate(s, n=0, m=10, seed=0)


# ---------------------------------------------------------------------------
# xy CSV round trip
# ---------------------------------------------------------------------------

def test_xy_csv_round_trip(tmp_path, rng):
    X = rng.normal(size=(12, 2))
    y = rng.normal(size=12)
    path = tmp_path / "data.csv"
    write_xy_csv(path, X, y)
    X2, y2 = read_xy_csv(path)
    assert np.array_equal(X, X2)  # repr round-trips floats exactly
    assert np.array_equal(y, y2)
    path2 = tmp_path / "x_only.csv"
    write_xy_csv(path2, X, None)
    X3, y3 = read_xy_csv(path2)
    assert np.array_equal(X, X3) and y3 is None
    with pytest.raises(ValueError):
        read_xy_csv(path2, expect_y=True)


# ---------------------------------------------------------------------------
# real-data loading and splitting
# ---------------------------------------------------------------------------

def _write_table(path, rows, header="a,b,label"):
    path.write_text(header + "\n" + "\n".join(rows) + "\n")


def test_load_csv_standardizes_and_maps_labels(tmp_path):
    path = tmp_path / "t.csv"
    _write_table(path, ["1,10,pos", "2,20,neg", "3,30,pos", "4,40,neg"])
    table = load_csv(path, label_column="label", positive_label="pos")
    assert table.feature_names == ["a", "b"]
    assert np.allclose(table.features.mean(axis=0), 0.0, atol=1e-12)
    assert np.allclose(table.features.std(axis=0, ddof=1), 1.0)
    assert np.array_equal(table.labels, [1.0, -1.0, 1.0, -1.0])
    raw = load_csv(path, label_column="label", positive_label="pos", standardize=False)
    assert raw.features[0, 0] == 1.0


def test_load_csv_errors(tmp_path):
    path = tmp_path / "t.csv"
    _write_table(path, ["1,2,pos", "3,4,neg"])
    with pytest.raises(ValueError):
        load_csv(path, label_column="target", positive_label="pos")
    with pytest.raises(ValueError):
        load_csv(path, label_column="label", positive_label="maybe")
    _write_table(path, ["1,2,pos", "3,oops,neg"])
    with pytest.raises(ValueError):
        load_csv(path, label_column="label", positive_label="pos")
    _write_table(path, ["1,2,pos", "3,4"])
    with pytest.raises(ValueError):
        load_csv(path, label_column="label", positive_label="pos")
    _write_table(path, ["1,2,pos", "3,4,pos"])
    with pytest.raises(ValueError):  # only one label value observed
        load_csv(path, label_column="label", positive_label="pos")
    _write_table(path, ["1,2,pos", "1,4,neg"])
    with pytest.raises(ValueError):  # constant first column
        load_csv(path, label_column="label", positive_label="pos")


def test_covariate_split_properties(rng):
    X = rng.normal(size=(400, 2))
    y = np.where(rng.uniform(size=400) < 0.5, 1.0, -1.0)
    table = LabeledTable(X, y, ["a", "b"], "label")
    src, tgt = covariate_split(table, ell=4.0, seed=11)
    assert src.features.shape[0] + tgt.features.shape[0] == 400
    # deterministic in the seed
    src2, tgt2 = covariate_split(table, ell=4.0, seed=11)
    assert np.array_equal(src.features, src2.features)
    # smaller ell raises every inclusion probability: with shared uniforms
    # the target set can only grow
    _, tgt_small = covariate_split(table, ell=1.0, seed=11)
    assert tgt_small.features.shape[0] >= tgt.features.shape[0]
    with pytest.raises(ValueError):
        covariate_split(table, ell=0.0, seed=11)
    with pytest.raises(ValueError):
        covariate_split(table, ell=1e12, seed=11)  # nobody reaches the target
