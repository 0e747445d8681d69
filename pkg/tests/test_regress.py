"""Regression layer against the SVD oracle and frozen closed forms."""

import math

import numpy as np
import pytest

from bridgebench.regress import (
    Dataset, GdConfig, RegressionModel, fit_gd, fit_ols, load_model, mse,
    predict_log, prune_refit, save_model, split_dataset,
    standardized_coefficients,
)

from oracles import ols_fit


def _make_dataset(n=60, seed=4, coef=(-0.9, -0.5, 0.3), intercept=5.0,
                  noise=0.05):
    rng = np.random.default_rng(seed)
    d = rng.uniform(2, 60, n)
    t = rng.uniform(1e-5, 1e-2, n)
    b = rng.uniform(2, 16, n)
    ln_r = (intercept + coef[0] * np.log(d) + coef[1] * np.log(t)
            + coef[2] * np.log(b) + rng.normal(0, noise, n))
    feats = np.column_stack([d, t, b])
    return Dataset(("d", "t", "b"), feats, np.exp(ln_r))


def test_dataset_validation():
    with pytest.raises(ValueError):
        Dataset(("d",), np.array([[1.0]]), np.array([1.0]))  # 1 row
    with pytest.raises(ValueError):
        Dataset(("d",), np.array([[1.0], [2.0]]), np.array([1.0, -3.0]))
    with pytest.raises(ValueError):
        Dataset(("d", "t"), np.array([[1.0], [2.0]]), np.array([1.0, 3.0]))


def test_ols_recovers_an_exact_log_linear_law():
    ds = _make_dataset(noise=0.0)
    model = fit_ols(ds)
    assert abs(model.coefficient("d") + 0.9) < 1e-9
    assert abs(model.coefficient("t") + 0.5) < 1e-9
    assert abs(model.coefficient("b") - 0.3) < 1e-9
    assert abs(model.intercept - 5.0) < 1e-9
    assert model.mse_train < 1e-18


def test_ols_matches_svd_oracle_with_noise():
    ds = _make_dataset(noise=0.2)
    model = fit_ols(ds)
    coefs, intercept, train_mse = ols_fit(np.log(ds.features),
                                          np.log(ds.targets))
    assert np.allclose(model.coefficients, coefs, atol=1e-9)
    assert abs(model.intercept - intercept) < 1e-9
    assert abs(model.mse_train - train_mse) < 1e-12


def test_ols_rejects_rank_deficiency():
    feats = np.array([[2.0, 4.0], [3.0, 9.0], [5.0, 25.0], [7.0, 49.0]])
    # second column is the square of the first: collinear in log space
    with pytest.raises(ValueError):
        fit_ols(Dataset(("a", "a2"), feats, np.array([1.0, 2.0, 3.0, 4.0])))


def test_gd_matches_ols_within_published_tolerances():
    ds = _make_dataset(noise=0.1)
    ols = fit_ols(ds)
    gd = fit_gd(ds)
    for name in ds.feature_names:
        assert abs(gd.coefficient(name) - ols.coefficient(name)) < 1e-3
    assert abs(gd.intercept - ols.intercept) < 1e-3
    assert abs(gd.mse_train - ols.mse_train) < 1e-6


def test_gd_zero_iterations_gives_the_mean_model():
    ds = _make_dataset()
    model = fit_gd(ds, GdConfig(max_iterations=0))
    assert model.coefficients == (0.0, 0.0, 0.0)
    y = np.log(ds.targets)
    assert abs(model.intercept - float(np.mean(y))) < 1e-12
    assert abs(model.mse_train - float(np.var(y))) < 1e-12


def test_gd_divergence_is_reported():
    ds = _make_dataset()
    with pytest.raises(ValueError, match="diverged"):
        fit_gd(ds, GdConfig(learning_rate=50.0))


def test_gd_base_invariance_of_coefficients():
    ds = _make_dataset(noise=0.1)
    scaled = Dataset(ds.feature_names,
                     ds.features * np.array([1.0, 1000.0, 1.0]),
                     ds.targets)
    for fit in (fit_ols, fit_gd):
        a = fit(ds)
        b = fit(scaled)
        for name in ds.feature_names:
            assert abs(a.coefficient(name) - b.coefficient(name)) < 1e-6
        shift = a.intercept - b.intercept
        assert abs(shift - a.coefficient("t") * math.log(1000.0)) < 1e-6


def test_predict_matches_frozen_closed_form():
    # a two-feature model with the reference coefficient set
    model = RegressionModel(target_name="r", feature_names=("d", "t"),
                            coefficients=(-0.946, -0.492), intercept=6.291,
                            mse_train=0.0)
    ln_r = predict_log(model, {"d": 100, "t": 0.001})
    assert abs(ln_r - 5.3331) < 1e-3
    assert 206.0 < math.exp(ln_r) < 208.0


def test_predict_needs_every_model_feature():
    model = RegressionModel("r", ("d", "t"), (-1.0, -1.0), 0.0, 0.0)
    with pytest.raises(ValueError):
        predict_log(model, {"d": 10})
    with pytest.raises(ValueError):
        predict_log(model, {"d": 10, "t": -1})


def test_prune_drops_negligible_features():
    ds = _make_dataset(coef=(-0.9, -0.5, 0.0005), noise=0.01)
    full = fit_ols(ds)
    pruned = prune_refit(ds, full, threshold=0.05)
    assert pruned.feature_names == ("d", "t")
    assert not pruned.pruned_all
    assert abs(pruned.coefficient("d") + 0.9) < 0.05


def test_prune_keeps_strong_features_untouched():
    ds = _make_dataset(noise=0.05)
    full = fit_ols(ds)
    assert prune_refit(ds, full, threshold=0.05) is full


def test_prune_all_keeps_the_largest_and_flags():
    rng = np.random.default_rng(9)
    feats = np.column_stack([rng.uniform(2, 60, 50), rng.uniform(2, 60, 50)])
    targets = np.exp(rng.normal(3.0, 0.001, 50))  # essentially constant
    ds = Dataset(("d", "t"), feats, targets)
    pruned = prune_refit(ds, fit_ols(ds), threshold=0.05)
    assert pruned.pruned_all
    assert len(pruned.feature_names) == 1


def test_standardized_coefficients_scale_with_spread():
    ds = _make_dataset(noise=0.0)
    model = fit_ols(ds)
    scaled = standardized_coefficients(model, ds)
    col = np.log(ds.features[:, 0])
    assert abs(scaled["d"] - model.coefficient("d") * col.std()) < 1e-12


def test_split_is_deterministic_and_disjoint():
    ds = _make_dataset(n=40)
    train1, test1 = split_dataset(ds, 0.25, seed=3)
    train2, test2 = split_dataset(ds, 0.25, seed=3)
    assert np.array_equal(train1.features, train2.features)
    assert np.array_equal(test1.features, test2.features)
    assert train1.n + test1.n == ds.n
    assert test1.n == 10
    model = fit_ols(train1, test=test1)
    assert model.mse_test is not None
    assert abs(model.mse_test - mse(model, test1)) < 1e-15


def test_model_file_round_trip(tmp_path):
    ds = _make_dataset()
    train, test = split_dataset(ds, 0.2, seed=1)
    model = fit_gd(train, test=test)
    path = tmp_path / "model.txt"
    save_model(model, path)
    again = load_model(path)
    assert again == model


def test_model_file_errors_are_line_numbered(tmp_path):
    path = tmp_path / "broken.txt"
    path.write_text("target=r\nfeatures=d\nwhat even is this\n")
    with pytest.raises(ValueError, match="line 3"):
        load_model(path)
