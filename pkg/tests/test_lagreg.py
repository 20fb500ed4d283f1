import math

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from errors import DataError, KTooLarge, SingularRegression, TooShort, WindowTooLarge
from lagreg import (LagMatrix, LinearModel, RegressorSpec, TreeModel, Weighting,
                    embed, fit_cart, fit_ols, fit_regressor, fit_ridge,
                    knn_neighbours, predict_cart, predict_knn, recursive_forecast,
                    tree_sse)


def random_lags(rng, rows, W) -> LagMatrix:
    return LagMatrix(X=rng.normal(size=(rows, W)), y=rng.normal(size=rows), W=W)


def test_embed_examples():
    L = embed([1, 2, 3, 4], 2)
    assert_array_equal(L.X, [[1, 2], [2, 3]])
    assert_array_equal(L.y, [3, 4])
    L = embed([1, 2, 3], 1)
    assert_array_equal(L.X, [[1], [2]])
    assert_array_equal(L.y, [2, 3])
    assert embed(np.arange(10.0), 9).rows == 1
    with pytest.raises(WindowTooLarge):
        embed([1, 2, 3], 3)


def test_embed_overlap_reconstructs_series(rng):
    s = rng.normal(size=25)
    for W in (1, 4, 12, 24):
        L = embed(s, W)
        assert L.rows == s.size - W
        assert_array_equal(np.concatenate([L.X[0], L.y]), s)
        assert_array_equal(L.X[-1], s[-W - 1:-1])


def test_ols_exact_line():
    L = LagMatrix(X=np.arange(6.0).reshape(-1, 1), y=2.0 * np.arange(6.0) + 1.0, W=1)
    assert_allclose(fit_ols(L), [1.0, 2.0], rtol=0, atol=1e-9)


def test_ols_constant_target():
    L = LagMatrix(X=np.arange(12.0).reshape(-1, 2), y=np.full(6, 4.2), W=2)
    assert_array_equal(fit_ols(L), [4.2, 0.0, 0.0])


def test_ols_matches_pseudo_inverse_and_residuals_orthogonal(rng):
    L = random_lags(rng, 40, 5)
    coef = fit_ols(L)
    X = np.column_stack([np.ones(40), L.X])
    assert_allclose(coef, np.linalg.pinv(X) @ L.y, rtol=0, atol=1e-8)
    assert_allclose(X.T @ (L.y - X @ coef), np.zeros(6), rtol=0, atol=1e-8)


def test_ols_underdetermined_and_collinear():
    with pytest.raises(SingularRegression):
        fit_ols(LagMatrix(X=np.ones((2, 3)), y=np.array([1.0, 2.0]), W=3))
    line = embed(2.0 * np.arange(10.0) + 1.0, 2)
    with pytest.raises(SingularRegression):
        fit_ols(line)


def test_ridge_zero_alpha_equals_ols(rng):
    L = random_lags(rng, 30, 4)
    assert_allclose(fit_ridge(L, 0.0), fit_ols(L), rtol=0, atol=1e-8)


def test_ridge_large_alpha_shrinks_to_mean(rng):
    L = random_lags(rng, 30, 3)
    coef = fit_ridge(L, 1e12)
    assert np.max(np.abs(coef[1:])) < 1e-9
    assert LinearModel(coef).predict_one(rng.normal(size=3)) == pytest.approx(L.y.mean(), abs=1e-6)


def test_ridge_matches_explicit_inverse(rng):
    L = random_lags(rng, 30, 3)
    x_mean, y_mean = L.X.mean(axis=0), L.y.mean()
    Xc = L.X - x_mean
    beta = np.linalg.inv(Xc.T @ Xc + np.eye(3)) @ Xc.T @ (L.y - y_mean)
    oracle = np.concatenate(([y_mean - x_mean @ beta], beta))
    assert_allclose(fit_ridge(L, 1.0), oracle, rtol=0, atol=1e-8)
    with pytest.raises(DataError):
        fit_ridge(L, -1.0)


def _left_sum(values) -> float:
    total = 0.0
    for v in values:
        total += v
    return total


def knn_oracle(L: LagMatrix, q, k: int, weighting: str):
    """Naive scan; every sum runs left to right, as the implementation's do."""
    dist = [math.sqrt(_left_sum((L.X[i, j] - q[j]) * (L.X[i, j] - q[j]) for j in range(L.W)))
            for i in range(L.rows)]
    order = sorted(range(L.rows), key=lambda i: (dist[i], i))[:k]
    if weighting == "uniform":
        return order, _left_sum(L.y[i] for i in order) / k
    for i in order:
        if dist[i] == 0.0:
            return order, L.y[i]
    return order, (_left_sum(L.y[i] / dist[i] for i in order)
                   / _left_sum(1.0 / dist[i] for i in order))


def test_knn_matches_exhaustive_scan(rng):
    L = random_lags(rng, 60, 4)
    for n in range(200):
        q = rng.normal(size=4)
        k = int(rng.integers(1, 21))
        weighting = "uniform" if n % 2 else "distance"
        idx, _ = knn_neighbours(L, q, k)
        order, expected = knn_oracle(L, q, k, weighting)
        assert idx.tolist() == order
        assert predict_knn(L, q, k, weighting) == expected


def test_knn_exact_match_and_full_neighbourhood(rng):
    L = random_lags(rng, 15, 3)
    assert predict_knn(L, L.X[7], 1) == L.y[7]
    assert predict_knn(L, L.X[7], 5, Weighting.DISTANCE) == L.y[7]
    assert predict_knn(L, rng.normal(size=3), 15) == pytest.approx(L.y.mean(), abs=1e-12)
    with pytest.raises(KTooLarge):
        predict_knn(L, L.X[0], 16)


def test_knn_ties_go_to_lower_row():
    L = LagMatrix(X=np.array([[1.0], [-1.0], [1.0]]), y=np.array([10.0, 20.0, 30.0]), W=1)
    idx, dist = knn_neighbours(L, np.array([0.0]), 2)
    assert idx.tolist() == [0, 1]
    assert_array_equal(dist, [1.0, 1.0])


def test_cart_separates_sign_of_first_lag():
    X = np.array([[-2.0, 5.0], [-1.0, 3.0], [1.0, 4.0], [2.0, 6.0]])
    y = np.array([1.0, 1.0, 5.0, 5.0])
    tree = fit_cart(LagMatrix(X=X, y=y, W=2), max_depth=1, min_leaf=1)
    assert tree.feature == 0 and tree.threshold == 0.0
    assert predict_cart(tree, np.array([-0.5, 0.0])) == 1.0
    assert predict_cart(tree, np.array([0.5, 0.0])) == 5.0


def test_cart_split_between_neighbouring_doubles():
    a = np.nextafter(1.0, 2.0)
    b = np.nextafter(a, 2.0)
    L = LagMatrix(X=np.array([[a], [a], [b], [b]]), y=np.array([0.0, 0.0, 1.0, 1.0]), W=1)
    tree = fit_cart(L, max_depth=1, min_leaf=1)
    assert a <= tree.threshold < b
    assert (tree.left.samples, tree.right.samples) == (2, 2)
    assert (tree.left.value, tree.right.value) == (0.0, 1.0)
    assert predict_cart(tree, np.array([a])) == 0.0
    assert predict_cart(tree, np.array([b])) == 1.0
    assert tree_sse(tree, L) == 0.0


def test_cart_single_leaf_on_constant_target(rng):
    L = LagMatrix(X=rng.normal(size=(10, 2)), y=np.full(10, 0.3), W=2)
    tree = fit_cart(L, max_depth=1, min_leaf=5)
    assert tree.is_leaf and tree.value == pytest.approx(0.3)
    with pytest.raises(TooShort):
        fit_cart(L, max_depth=2, min_leaf=6)
    with pytest.raises(DataError):
        fit_cart(L, max_depth=0, min_leaf=1)


def _sse(values):
    if not values:
        return 0.0
    mean = sum(values) / len(values)
    return sum((v - mean) ** 2 for v in values)


def _oracle_tree_sse(X, y, depth, max_depth, min_leaf):
    """Greedy tree grown with plain loops over every (feature, midpoint) split."""
    parent = _sse(y)
    if depth >= max_depth or len(y) < 2 * min_leaf or max(y) == min(y):
        return parent
    best, best_total = None, parent - 1e-12 * (1.0 + parent)
    for f in range(len(X[0])):
        values = sorted(set(row[f] for row in X))
        for lo, hi in zip(values, values[1:]):
            threshold = (lo + hi) / 2.0
            left = [i for i in range(len(y)) if X[i][f] <= threshold]
            right = [i for i in range(len(y)) if X[i][f] > threshold]
            if len(left) < min_leaf or len(right) < min_leaf:
                continue
            total = _sse([y[i] for i in left]) + _sse([y[i] for i in right])
            if total < best_total:
                best, best_total = (left, right), total
    if best is None:
        return parent
    return sum(_oracle_tree_sse([X[i] for i in part], [y[i] for i in part],
                                depth + 1, max_depth, min_leaf) for part in best)


def test_cart_depth_two_matches_exhaustive_split_search(rng):
    for trial in range(20):
        L = random_lags(rng, 12, 3)
        min_leaf = 1 + trial % 2
        tree = fit_cart(L, max_depth=2, min_leaf=min_leaf)
        expected = _oracle_tree_sse(L.X.tolist(), L.y.tolist(), 0, 2, min_leaf)
        assert tree_sse(tree, L) == pytest.approx(expected, abs=1e-9)


def test_cart_training_error_non_increasing_in_depth(rng):
    L = random_lags(rng, 80, 4)
    errors = [tree_sse(fit_cart(L, d, 2), L) for d in range(1, 9)]
    assert all(b <= a + 1e-9 for a, b in zip(errors, errors[1:]))


def test_recursive_forecast_continues_line():
    series = 2.0 * np.arange(20.0) + 1.0
    model = LinearModel(fit_ols(embed(series, 1)))
    assert_allclose(recursive_forecast(model, series, 1, 3).values, [41.0, 43.0, 45.0], rtol=0, atol=1e-6)


def test_recursive_forecast_with_single_leaf(rng):
    L = LagMatrix(X=rng.normal(size=(8, 2)), y=np.full(8, -0.4), W=2)
    model = TreeModel(fit_cart(L, 3, 1))
    assert_allclose(recursive_forecast(model, rng.normal(size=5), 2, 4).values, [-0.4] * 4, rtol=0, atol=1e-15)


def test_recursive_one_step_equals_direct_prediction(rng):
    s = rng.normal(size=40)
    L = embed(s, 5)
    for spec in (RegressorSpec("OLS"), RegressorSpec("Ridge", {"alpha": 0.5}),
                 RegressorSpec("KNN", {"k": 3, "weighting": "distance"}),
                 RegressorSpec("CART", {"max_depth": 3, "min_leaf": 2})):
        model = fit_regressor(L, spec)
        assert recursive_forecast(model, s, 5, 1).values[0] == model.predict_one(s[-5:])


def test_recursive_forecast_errors():
    model = LinearModel(np.array([0.0, 1.0, 0.0]))
    with pytest.raises(WindowTooLarge):
        recursive_forecast(model, [1.0], 2, 1)
    with pytest.raises(DataError):
        recursive_forecast(model, [1.0, 2.0], 2, 0)


def test_regressor_spec_validation():
    with pytest.raises(DataError):
        RegressorSpec("KNN", {"k": 0})
    with pytest.raises(DataError):
        RegressorSpec("CART", {"max_depth": 13, "min_leaf": 1})
    with pytest.raises(DataError):
        RegressorSpec("Ridge", {"alpha": -0.1})
    spec = RegressorSpec("KNN", {"k": 4, "weighting": "uniform"})
    assert RegressorSpec.from_dict(spec.to_dict()) == spec
    with pytest.raises(KTooLarge):
        fit_regressor(embed(np.arange(6.0), 3), RegressorSpec("KNN", {"k": 4}))
