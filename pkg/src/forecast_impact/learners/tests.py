"""Tests for the offline and online regressors."""

import logging

from pathlib import Path

import numpy as np
import pytest

from forecast_impact.errors import (
    ConfigError,
    DimensionMismatchError,
    DivergedLossError,
    KTooLargeError,
    NoConvergenceError,
    NonFiniteUpdateError,
    NonPositiveTargetError,
    NotFittedError,
    SingularDesignError,
    UnsupportedHyperparameterError,
)
from forecast_impact.learners import (
    OFFLINE_GRIDS,
    ONLINE_GRIDS,
    AdaBoostRegressor,
    BoxCoxRegressor,
    MLPRegressor,
    OnlineLinearRegressor,
    OnlineMLPRegressor,
    PassiveAggressiveRegressor,
    TreeRegressor,
    boxcox_inverse,
    boxcox_transform,
    dump_model,
    expand_grid,
    fit_adaboost,
    fit_elastic_net,
    fit_extra_trees,
    fit_gradient_boosting,
    fit_knn,
    fit_lasso,
    fit_linear_svr,
    fit_mlp,
    fit_ols,
    fit_random_forest,
    fit_ridge,
    fit_tree,
    load_model,
    make_regressor,
    predict,
)
from forecast_impact.learners.linear import CoordinateDescentRegressor
from forecast_impact.learners.mlp import flatten, forward, init_params, loss_and_grad, unflatten
from forecast_impact.learners.svr import svr_objective


def random_problem(n: int, p: int, seed: int = 0, noise: float = 0.1) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, p))
    y = X @ rng.normal(size=p) + 1.5 + noise * rng.normal(size=n)
    return X, y


def sine_problem(n: int, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    X = rng.uniform(0.0, 2.0 * np.pi, size=(n, 1))
    return X, np.sin(X[:, 0]) + 0.1 * rng.normal(size=n)


def relative_error(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(a) + np.linalg.norm(b), 1e-12))


def finite_difference(params: list, X: np.ndarray, y: np.ndarray, activation: str, l2_alpha: float) -> np.ndarray:
    vector = flatten(params)
    out = np.empty_like(vector)
    h = 1e-5
    for i in range(len(vector)):
        up, down = vector.copy(), vector.copy()
        up[i] += h
        down[i] -= h
        loss_up = loss_and_grad(unflatten(up, params), X, y, activation, l2_alpha)[0]
        loss_down = loss_and_grad(unflatten(down, params), X, y, activation, l2_alpha)[0]
        out[i] = (loss_up - loss_down) / (2 * h)
    return out


##########
# Linear #
##########
def test_ols_exact_line():
    model = fit_ols(np.array([[1.0], [2.0], [3.0]]), np.array([2.0, 4.0, 6.0]))
    assert model.coef[0] == pytest.approx(2.0, abs=1e-9)
    assert model.intercept == pytest.approx(0.0, abs=1e-9)
    assert predict(model, np.array([[4.0]])) == pytest.approx([8.0])


def test_ols_rejects_duplicate_columns():
    X, y = random_problem(20, 1)
    with pytest.raises(SingularDesignError):
        fit_ols(np.column_stack([X, X]), y)


def test_ols_matches_normal_equations():
    X, y = random_problem(50, 3)
    design = np.column_stack([np.ones(50), X])
    oracle = np.linalg.solve(design.T @ design, design.T @ y)
    model = fit_ols(X, y)
    assert np.allclose(model.coef, oracle[1:], atol=1e-7)
    assert model.intercept == pytest.approx(oracle[0], abs=1e-7)


def test_ridge_without_penalty_is_ols():
    X, y = random_problem(30, 4)
    assert np.allclose(fit_ridge(X, y, lam=0.0).coef, fit_ols(X, y).coef, atol=1e-8)


def test_ridge_huge_penalty_flattens_slopes():
    X, y = random_problem(30, 4)
    X = X - X.mean(axis=0)
    assert np.all(np.abs(fit_ridge(X, y, lam=1e12).coef) < 1e-6)


def test_ridge_matches_closed_form():
    X, y = random_problem(20, 4, seed=3)
    Xc, yc = X - X.mean(axis=0), y - y.mean()
    oracle = np.linalg.solve(Xc.T @ Xc + np.eye(4), Xc.T @ yc)
    model = fit_ridge(X, y, lam=1.0)
    assert np.allclose(model.coef, oracle, atol=1e-7)
    assert model.intercept == pytest.approx(y.mean() - X.mean(axis=0) @ oracle, abs=1e-7)


def test_ridge_shrinks_with_penalty():
    X, y = random_problem(40, 5, seed=4)
    X = (X - X.mean(axis=0)) / X.std(axis=0)
    norms = [np.linalg.norm(fit_ridge(X, y, lam=lam).coef) for lam in (0.0, 0.1, 1.0, 10.0, 100.0)]
    assert all(later <= earlier for earlier, later in zip(norms, norms[1:]))


def test_lasso_without_penalty_is_ols():
    X, y = random_problem(50, 3)
    assert np.allclose(fit_lasso(X, y, lam=0.0, tol=1e-12).coef, fit_ols(X, y).coef, atol=1e-6)


def test_lasso_large_penalty_zeroes_slopes():
    X, y = random_problem(50, 3)
    X = (X - X.mean(axis=0)) / X.std(axis=0)
    assert np.all(fit_lasso(X, y, lam=1e3).coef == 0.0)


def test_lasso_objective_beats_random_coefficients():
    X, y = random_problem(10, 2, seed=5)
    model = fit_lasso(X, y, lam=0.5)
    best = model.objective(X, y)
    rng = np.random.default_rng(6)
    for _ in range(1000):
        assert best <= model.objective(X, y, rng.normal(scale=3.0, size=2), rng.normal(scale=3.0)) + 1e-12
    ols = fit_ols(X, y)
    assert best <= model.objective(X, y, ols.coef, ols.intercept) + 1e-12


def test_elastic_net_endpoints():
    X, y = random_problem(40, 3, seed=7)
    lasso = fit_lasso(X, y, lam=0.05, tol=1e-12)
    assert np.allclose(fit_elastic_net(X, y, lam=0.05, l1_ratio=1.0, tol=1e-12).coef, lasso.coef, atol=1e-10)
    # The 1/2n loss scaling makes the pure-L2 end equal to ridge with lam * n
    ridge = fit_ridge(X, y, lam=0.1 * len(y))
    assert np.allclose(fit_elastic_net(X, y, lam=0.1, l1_ratio=0.0, tol=1e-12).coef, ridge.coef, atol=1e-6)


def test_coordinate_descent_no_convergence(caplog: pytest.LogCaptureFixture):
    X, y = random_problem(30, 3)
    X = np.column_stack([X, X[:, 0] + 0.01 * X[:, 1]])
    with pytest.raises(NoConvergenceError) as excinfo:
        CoordinateDescentRegressor(lam=1e-4, max_iter=1, strict=True).fit(X, y)
    assert excinfo.value.diagnostics["sweeps"] == 1
    with caplog.at_level(logging.WARNING):
        model = CoordinateDescentRegressor(lam=1e-4, max_iter=1).fit(X, y)
    assert model.diagnostics["converged"] is False
    assert "did not converge" in caplog.text


#############
# Neighbors #
#############
def test_knn_all_neighbours_is_mean():
    X, y = random_problem(12, 2)
    model = fit_knn(X, y, k=12)
    assert np.allclose(model.predict(X), y.mean())


def test_knn_single_neighbour_recalls_training_row():
    X, y = random_problem(12, 2)
    assert np.array_equal(fit_knn(X, y, k=1).predict(X[[4]]), y[[4]])


def test_knn_matches_sort_oracle():
    X, y = random_problem(30, 3, seed=8)
    queries = np.random.default_rng(9).normal(size=(10, 3))
    model = fit_knn(X, y, k=5)
    for query, prediction in zip(queries, model.predict(queries)):
        nearest = sorted(range(30), key=lambda i: (float(((X[i] - query) ** 2).sum()), i))[:5]
        assert prediction == pytest.approx(y[nearest].mean(), abs=1e-12)


def test_knn_tie_goes_to_lower_row():
    X = np.array([[1.0], [-1.0], [1.0]])
    y = np.array([10.0, 20.0, 30.0])
    assert fit_knn(X, y, k=1).predict(np.array([[0.0]]))[0] == 10.0


def test_knn_too_many_neighbours():
    X, y = random_problem(5, 2)
    with pytest.raises(KTooLargeError):
        fit_knn(X, y, k=6)


#########
# Trees #
#########
def best_single_split(X: np.ndarray, y: np.ndarray) -> float:
    best = float(((y - y.mean()) ** 2).sum())
    for j in range(X.shape[1]):
        for threshold in np.unique(X[:, j])[:-1]:
            mask = X[:, j] <= threshold
            left, right = y[mask], y[~mask]
            best = min(best, float(((left - left.mean()) ** 2).sum() + ((right - right.mean()) ** 2).sum()))
    return best


def test_tree_constant_target_is_one_leaf():
    X, _ = random_problem(20, 2)
    tree = fit_tree(X, np.full(20, 7.0))
    assert tree.n_leaves == 1
    assert np.all(tree.predict(X) == 7.0)


def test_tree_finds_step():
    X = np.arange(10, dtype=float)[:, None]
    y = (X[:, 0] >= 5).astype(float)
    tree = fit_tree(X, y)
    assert 4 < tree.threshold[0] < 6
    assert tree.n_leaves == 2
    assert tree.training_rss() == 0.0


def test_tree_depth_two_matches_enumeration():
    X, y = random_problem(12, 2, seed=10, noise=1.0)
    stump = fit_tree(X, y, max_depth=1)
    assert stump.root_split_rss() == pytest.approx(best_single_split(X, y), abs=1e-9)
    # Greedy growth: each child of the chosen root split is the best single split of its rows
    tree = fit_tree(X, y, max_depth=2)
    goes_left = X[:, tree.feature[0]] <= tree.threshold[0]
    oracle = best_single_split(X[goes_left], y[goes_left]) + best_single_split(X[~goes_left], y[~goes_left])
    assert tree.training_rss() == pytest.approx(oracle, abs=1e-9)
    assert tree.training_rss() <= stump.training_rss() + 1e-9
    assert tree.depth <= 2


def test_exhaustive_root_never_worse_than_random():
    X, y = random_problem(40, 3, seed=11, noise=1.0)
    exhaustive = fit_tree(X, y, max_depth=1).root_split_rss()
    for seed in range(50):
        assert exhaustive <= fit_tree(X, y, max_depth=1, split_mode="random", seed=seed).root_split_rss() + 1e-9


def test_every_query_reaches_one_leaf():
    X, y = random_problem(60, 3, seed=12)
    tree = fit_tree(X, y, min_samples_leaf=3)
    leaves = tree.apply(np.random.default_rng(13).normal(size=(200, 3)) * 3)
    assert np.all(tree.feature[leaves] == -1)


def test_pruning_reduces_leaves():
    X, y = random_problem(80, 2, seed=14, noise=1.0)
    leaves = [fit_tree(X, y, ccp_alpha=alpha).n_leaves for alpha in (0.0, 0.1, 1.0, 10.0, 1e6)]
    assert all(later <= earlier for earlier, later in zip(leaves, leaves[1:]))
    assert leaves[-1] == 1


def test_tree_rejects_bad_min_leaf():
    with pytest.raises(UnsupportedHyperparameterError):
        TreeRegressor(min_samples_leaf=0)


#############
# Ensembles #
#############
def test_single_extra_tree_is_a_random_tree():
    X, y = random_problem(50, 3, seed=15)
    ensemble = fit_extra_trees(X, y, n_estimators=1, seed=4)
    tree = fit_tree(X, y, split_mode="random", seed=4)
    assert np.array_equal(ensemble.predict(X), tree.predict(X))


@pytest.mark.parametrize("fit", [fit_random_forest, fit_extra_trees, fit_adaboost, fit_gradient_boosting])
def test_ensembles_on_constant_target(fit):
    X, _ = random_problem(30, 2)
    assert np.allclose(fit(X, np.full(30, 3.0)).predict(X), 3.0)


def test_forest_is_reproducible():
    X, y = random_problem(60, 4, seed=16)
    first, second = fit_random_forest(X, y, seed=9), fit_random_forest(X, y, seed=9)
    for a, b in zip(first.trees, second.trees):
        assert np.array_equal(a.threshold, b.threshold)
        assert np.array_equal(a.feature, b.feature)


def test_more_trees_do_not_hurt():
    X, y = sine_problem(200, seed=17)
    X = np.column_stack([X, np.random.default_rng(18).normal(size=(200, 2))])
    X_test, y_test = X[150:], y[150:]
    wins = 0
    for seed in range(5):
        small = fit_random_forest(X[:150], y[:150], n_estimators=16, seed=seed)
        large = fit_random_forest(X[:150], y[:150], n_estimators=32, seed=seed)
        small_mse = np.mean((small.predict(X_test) - y_test) ** 2)
        large_mse = np.mean((large.predict(X_test) - y_test) ** 2)
        wins += large_mse <= 1.1 * small_mse
    assert wins >= 4


def test_adaboost_stops_on_perfect_stage():
    X = np.repeat(np.arange(10, dtype=float), 20)[:, None]
    y = (X[:, 0] >= 5).astype(float)
    model = fit_adaboost(X, y, n_estimators=16)
    assert model.diagnostics["n_stages"] == 1
    assert np.array_equal(model.predict(X), y)


def test_adaboost_single_stage_is_base_tree():
    X, y = sine_problem(40)
    model = fit_adaboost(X, y, n_estimators=1, seed=0)
    rng = np.random.default_rng(0)
    rows = rng.choice(40, size=40, replace=True, p=np.full(40, 1 / 40))
    base = TreeRegressor(max_depth=3).grow(X[rows], y[rows], rng)
    assert np.array_equal(model.predict(X), base.predict(X))


def test_adaboost_training_error():
    X, y = sine_problem(40)
    boosted = np.mean(np.abs(fit_adaboost(X, y, n_estimators=16).predict(X) - y))
    single = np.mean(np.abs(fit_tree(X, y, max_depth=3).predict(X) - y))
    assert boosted <= 1.1 * single


def test_adaboost_degenerate_first_stage(caplog: pytest.LogCaptureFixture):
    X = np.zeros((6, 1))
    y = np.array([0.0, 0.0, 0.0, 100.0, 100.0, 100.0])
    with caplog.at_level(logging.WARNING):
        model = AdaBoostRegressor(n_estimators=4, seed=1).fit(X, y)
    assert model.diagnostics["n_stages"] == 1
    assert model.diagnostics["degenerate_stage"] is True


def test_gradient_boosting_single_stage_is_centred_tree():
    X, y = random_problem(25, 2, seed=19)
    model = fit_gradient_boosting(X, y, n_estimators=1, learning_rate=1.0, max_depth=None)
    tree = fit_tree(X, y - y.mean())
    assert np.allclose(model.predict(X) - y, tree.predict(X) + y.mean() - y, atol=1e-12)


def test_gradient_boosting_training_error_never_rises():
    X, y = sine_problem(30, seed=20)
    model = fit_gradient_boosting(X, y, n_estimators=16, learning_rate=0.8)
    curve = [float(np.mean((y - y.mean()) ** 2)), *model.diagnostics["train_mse"]]
    assert all(later <= earlier + 1e-12 for earlier, later in zip(curve, curve[1:]))
    staged = list(model.staged_predict(X))
    assert len(staged) == 16
    assert np.allclose(staged[-1], model.predict(X))


#######
# SVR #
#######
def test_svr_fits_inside_the_tube():
    rng = np.random.default_rng(21)
    X = rng.uniform(-1.0, 1.0, size=(40, 1))
    y = 2.0 * X[:, 0] + 1.0
    model = fit_linear_svr(X, y, C=10.0, epsilon=0.1, seed=1)
    assert np.abs(model.predict(X) - y).max() <= 0.1 + 0.03
    assert model.diagnostics["objective"] <= model.diagnostics["initial_objective"]


def test_svr_tiny_c_flattens():
    X, y = random_problem(40, 2, seed=22)
    model = fit_linear_svr(X, y, C=1e-6)
    assert np.linalg.norm(model.coef) < 1e-3


def test_svr_objective_beats_random_weights():
    rng = np.random.default_rng(23)
    X = rng.normal(size=(20, 2))
    y = X @ np.array([3.0, -2.0]) + 5.0 + rng.normal(size=20)
    model = fit_linear_svr(X, y, C=1.0, epsilon=0.0)
    best = model.objective(X, y)
    ols = fit_ols(X, y)
    assert best <= svr_objective(X, y, ols.coef, ols.intercept, 1.0, 0.0) + 1e-9
    for _ in range(1000):
        assert best <= svr_objective(X, y, rng.normal(size=2), float(rng.normal()), 1.0, 0.0)


def test_svr_rejects_rbf():
    with pytest.raises(UnsupportedHyperparameterError):
        make_regressor("linear_svr", kernel="rbf", C=1.0, gamma=0.001)


#######
# MLP #
#######
@pytest.mark.parametrize("activation", ["tanh", "relu"])
def test_mlp_gradient_matches_finite_differences(activation: str):
    rng = np.random.default_rng(24)
    X, y = rng.normal(size=(5, 3)), rng.normal(size=5)
    params = init_params([3, 4, 2, 1], rng)
    analytic = flatten(loss_and_grad(params, X, y, activation, 0.1)[1])
    assert relative_error(analytic, finite_difference(params, X, y, activation, 0.1)) < 1e-4


def test_mlp_zero_epochs_is_initialisation():
    X, y = random_problem(15, 3)
    model = fit_mlp(X, y, hidden_sizes=(4,), activation="tanh", epochs=0, seed=3)
    expected = forward(init_params([3, 4, 1], np.random.default_rng(3)), X, "tanh")[0]
    assert np.array_equal(model.predict(X), expected)


def test_mlp_single_tanh_unit_matches_ols():
    rng = np.random.default_rng(25)
    X = rng.uniform(-0.5, 0.5, size=(200, 1))
    y = 0.5 * X[:, 0] + 0.2 + rng.normal(scale=0.1, size=200)
    ols_mse = np.mean((fit_ols(X, y).predict(X) - y) ** 2)
    model = fit_mlp(X, y, hidden_sizes=(1,), activation="tanh", l2_alpha=0.0, learning_rate=0.01, epochs=3000)
    assert np.mean((model.predict(X) - y) ** 2) <= 1.05 * ols_mse


def test_mlp_is_deterministic():
    X, y = random_problem(40, 3)
    first = fit_mlp(X, y, hidden_sizes=(5,), epochs=20, batch_size=8, seed=2)
    second = fit_mlp(X, y, hidden_sizes=(5,), epochs=20, batch_size=8, seed=2)
    assert np.array_equal(first.predict(X), second.predict(X))


def test_mlp_divergence_is_reported():
    X, y = random_problem(20, 2)
    with np.errstate(all="ignore"), pytest.raises(DivergedLossError) as excinfo:
        MLPRegressor(hidden_sizes=(5,), solver="sgd", learning_rate=1e12, epochs=200).fit(X, 1e6 * y)
    assert "loss_curve" in excinfo.value.diagnostics


###################
# Batch interface #
###################
def test_predict_checks_width_and_accepts_empty():
    X, y = random_problem(20, 3)
    model = fit_ols(X, y)
    with pytest.raises(DimensionMismatchError):
        model.predict(np.ones((2, 4)))
    assert model.predict(np.empty((0, 3))).shape == (0,)
    with pytest.raises(NotFittedError):
        make_regressor("ols").predict(X)


#################
# Online linear #
#################
def test_online_linear_hand_step():
    model = OnlineLinearRegressor(eta=0.5)
    model.learn_one(np.array([1.0]), 1.0)
    assert model.coef.tolist() == [0.5]
    assert model.intercept == 0.5
    assert model.updates_seen == 1


def test_online_linear_exact_prediction_is_fixpoint():
    model = OnlineLinearRegressor(eta=0.5)
    model.learn_one(np.array([1.0]), 1.0)
    coef, intercept = model.coef.copy(), model.intercept
    model.learn_one(np.array([1.0]), 1.0)
    assert np.array_equal(model.coef, coef)
    assert model.intercept == intercept
    assert model.updates_seen == 2


def test_online_linear_recovers_line():
    rng = np.random.default_rng(26)
    model = OnlineLinearRegressor(eta=0.05)
    for x in rng.uniform(-1.0, 1.0, size=500):
        model.learn_one(np.array([x]), 3.0 * x + 1.0)
    assert abs(model.coef[0] - 3.0) < 0.05
    assert abs(model.intercept - 1.0) < 0.05


def test_online_linear_divergence_keeps_state():
    model = OnlineLinearRegressor(eta=1e300)
    with np.errstate(all="ignore"), pytest.raises(NonFiniteUpdateError):
        model.learn_one(np.array([1e10]), 1e10)
    assert model.updates_seen == 0
    assert model.coef.tolist() == [0.0]


def test_predict_one_does_not_mutate():
    model = OnlineLinearRegressor(eta=0.1)
    model.fit(np.array([[1.0], [2.0]]), np.array([1.0, 3.0]))
    coef = model.coef.copy()
    model.predict_one(np.array([5.0]))
    assert np.array_equal(model.coef, coef)
    assert model.updates_seen == 2


#######################
# Passive-Aggressive #
#######################
def test_pa_passive_inside_tube():
    model = PassiveAggressiveRegressor(C=1.0, epsilon=0.5)
    model.learn_one(np.array([1.0, 2.0]), 3.0)
    coef, intercept = model.coef.copy(), model.intercept
    model.learn_one(np.array([1.0, 2.0]), model.predict_one(np.array([1.0, 2.0])) + 0.4)
    assert np.array_equal(model.coef, coef)
    assert model.intercept == intercept


def test_pa_exact_correction():
    model = PassiveAggressiveRegressor(C=10.0, epsilon=0.0, fit_intercept=False)
    model.learn_one(np.array([1.0]), 2.0)
    assert model.coef.tolist() == [2.0]
    assert model.predict_one(np.array([1.0])) == 2.0


def test_pa_pa2_step():
    model = PassiveAggressiveRegressor(C=1.0, epsilon=0.0, fit_intercept=False, variant="pa2")
    model.learn_one(np.array([1.0]), 3.0)
    assert model.coef[0] == pytest.approx(3.0 / 1.5)


def test_pa_recovers_slope():
    rng = np.random.default_rng(27)
    model = PassiveAggressiveRegressor(C=2.0, epsilon=0.01, fit_intercept=False)
    for x in rng.uniform(-1.0, 1.0, size=200):
        model.learn_one(np.array([x]), 2.0 * x)
    assert abs(model.coef[0] - 2.0) < 0.05


def test_pa_update_is_bounded():
    rng = np.random.default_rng(28)
    model = PassiveAggressiveRegressor(C=0.1, epsilon=0.0)
    for _ in range(100):
        x = rng.normal(size=3)
        before = np.append(model.coef, model.intercept) if model.fitted else np.zeros(4)
        model.learn_one(x, float(rng.normal(scale=10.0)))
        change = np.append(model.coef, model.intercept) - before
        assert np.linalg.norm(change) <= 0.1 * np.linalg.norm(np.append(x, 1.0)) + 1e-12


def test_pa_zero_norm_input_is_skipped(caplog: pytest.LogCaptureFixture):
    model = PassiveAggressiveRegressor(C=1.0, epsilon=0.0, fit_intercept=False)
    with caplog.at_level(logging.WARNING):
        model.learn_one(np.array([0.0]), 5.0)
    assert model.coef.tolist() == [0.0]
    assert model.updates_seen == 1
    assert "zero-norm" in caplog.text


###########
# Box-Cox #
###########
def test_boxcox_examples():
    assert boxcox_transform(10.0, 1.0) == pytest.approx(9.0)
    assert boxcox_transform(np.e, 0.0) == pytest.approx(1.0)
    assert boxcox_inverse(boxcox_transform(37412.0, 0.1), 0.1) == pytest.approx(37412.0, rel=1e-9)


@pytest.mark.parametrize("power", [1.0, 0.1, 0.05, 0.01, 0.0])
def test_boxcox_round_trip(power: float):
    y = np.logspace(0, 6, 200)
    assert np.allclose(boxcox_inverse(boxcox_transform(y, power), power), y, rtol=1e-9, atol=0)


def test_boxcox_rejects_non_positive_targets():
    with pytest.raises(NonPositiveTargetError):
        boxcox_transform(0.0, 0.1)
    with pytest.raises(NonPositiveTargetError):
        BoxCoxRegressor().learn_one(np.array([1.0]), -3.0)


def test_boxcox_unit_power_is_shifted_linear():
    rng = np.random.default_rng(29)
    X = rng.uniform(-1.0, 1.0, size=(50, 2))
    y = 10.0 + X @ np.array([2.0, -1.0])
    boxcox = BoxCoxRegressor(power=1.0, eta=0.05).fit(X, y)
    linear = OnlineLinearRegressor(eta=0.05).fit(X, y - 1.0)
    assert np.allclose(boxcox.predict(X), linear.predict(X) + 1.0, atol=1e-9)


def test_boxcox_constant_stream_converges():
    model = BoxCoxRegressor(power=0.1, eta=0.1)
    for _ in range(200):
        model.learn_one(np.array([1.0]), 30000.0)
    assert model.predict_one(np.array([1.0])) == pytest.approx(30000.0, rel=0.01)


def test_boxcox_clamps_outside_domain():
    model = BoxCoxRegressor(power=0.1)
    model.learn_one(np.array([1.0]), 1.0)
    model.coef = np.array([-100.0])
    assert model.predict_one_flagged(np.array([1.0])) == (0.0, True)


##############
# Online MLP #
##############
def test_online_mlp_zero_rate_keeps_weights():
    model = OnlineMLPRegressor(hidden_sizes=(4,), learning_rate=0.0)
    model.learn_one(np.array([0.5, -0.2]), 1.0)
    before = flatten(model.params)
    model.learn_one(np.array([0.3, 0.1]), 2.0)
    assert np.array_equal(flatten(model.params), before)
    assert model.updates_seen == 2


def test_online_mlp_memorises_repeated_example():
    model = OnlineMLPRegressor(hidden_sizes=(10,), activation="tanh", l2_alpha=0.0, learning_rate=0.05)
    x = np.array([0.5, -0.2])
    for _ in range(500):
        model.learn_one(x, 1.0)
    assert abs(model.predict_one(x) - 1.0) < 0.01


@pytest.mark.parametrize("activation", ["tanh", "relu"])
def test_online_mlp_gradient(activation: str):
    model = OnlineMLPRegressor(hidden_sizes=(3,), activation=activation, l2_alpha=0.01, seed=5)
    x = np.array([0.4, -0.7, 0.2])
    model.learn_one(x, 0.0)
    analytic = flatten(model.loss_and_grad(x, 1.5)[1])
    numeric = finite_difference(model.params, x[None, :], np.array([1.5]), activation, 0.01)
    assert relative_error(analytic, numeric) < 1e-4


############
# Registry #
############
def test_svr_grid_has_eight_combinations():
    combinations = expand_grid(OFFLINE_GRIDS["linear_svr"])
    assert len(combinations) == 8
    assert sum(c["kernel"] == "rbf" for c in combinations) == 4


def test_grids_build_regressors():
    for kind, grid in {**OFFLINE_GRIDS, **ONLINE_GRIDS}.items():
        for params in expand_grid(grid):
            if params.get("kernel") == "rbf":
                continue
            assert make_regressor(kind, **params).kind == kind
    assert len(expand_grid(ONLINE_GRIDS["passive_aggressive"])) == 24
    assert expand_grid({}) == [{}]


def test_registry_errors():
    with pytest.raises(ConfigError):
        make_regressor("lars")
    with pytest.raises(ConfigError):
        make_regressor("knn", neighbours=3)
    with pytest.raises(ConfigError):
        expand_grid({"k": []})


#################
# Serialization #
#################
@pytest.mark.parametrize(
    ("kind", "params"),
    [
        ("ols", {}),
        ("ridge", {"lam": 1.0}),
        ("lasso", {"lam": 0.01}),
        ("knn", {"k": 3}),
        ("tree", {"max_depth": 4}),
        ("random_forest", {"n_estimators": 4}),
        ("extra_trees", {"n_estimators": 4}),
        ("adaboost", {"n_estimators": 4}),
        ("gradient_boosting", {"n_estimators": 4}),
        ("linear_svr", {"epochs": 10}),
        ("mlp", {"hidden_sizes": (3,), "epochs": 5}),
    ],
)
def test_saved_models_predict_identically(tmp_path: Path, kind: str, params: dict):
    X, y = random_problem(40, 3, seed=30)
    model = make_regressor(kind, **params).fit(X, y)
    dump_model(model, tmp_path / "model.json")
    loaded, document = load_model(tmp_path / "model.json")
    assert document.kind == kind
    assert np.array_equal(loaded.predict(X), model.predict(X))


@pytest.mark.parametrize("kind", ["passive_aggressive", "boxcox", "online_mlp", "online_linear"])
def test_checkpoint_resume_replays_exactly(tmp_path: Path, kind: str):
    X, y = random_problem(60, 3, seed=31)
    y = np.abs(y) + 1.0
    uninterrupted = make_regressor(kind)
    checkpointed = make_regressor(kind)
    uninterrupted.fit(X[:30], y[:30])
    checkpointed.fit(X[:30], y[:30])
    dump_model(checkpointed, tmp_path / "checkpoint.json")
    resumed, document = load_model(tmp_path / "checkpoint.json")
    assert document.updates_seen == 30
    for x_t, y_t in zip(X[30:], y[30:]):
        assert resumed.predict_one(x_t) == uninterrupted.predict_one(x_t)
        resumed.learn_one(x_t, y_t)
        uninterrupted.learn_one(x_t, y_t)
    assert resumed.updates_seen == 60


def test_model_document_version_is_checked(tmp_path: Path):
    X, y = random_problem(10, 1)
    path = tmp_path / "model.json"
    dump_model(fit_ols(X, y), path)
    path.write_text(path.read_text().replace('"format_version": 1', '"format_version": 99'))
    with pytest.raises(ValueError, match="unsupported model document version"):
        load_model(path)

