import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from errors import DataError, TooShort
from forecast import (Forecast, ForecasterKind, ForecasterSpec, ar_design, fit_ar,
                      fit_predict, fit_predict_ar, fit_predict_expsmoothing,
                      fit_predict_naive_drift, fit_predict_polytrend,
                      polytrend_coefficients)


def test_naive_drift_examples():
    assert_array_equal(fit_predict_naive_drift([1.0, 2.0, 3.0], 2).values, [4.0, 5.0])
    assert_array_equal(fit_predict_naive_drift([5.0, 5.0, 5.0], 3).values, [5.0, 5.0, 5.0])
    with pytest.raises(TooShort):
        fit_predict_naive_drift([1.0], 1)


def test_naive_drift_is_affine_equivariant(rng):
    y = rng.normal(size=30)
    a, b = 2.5, -0.75
    assert_allclose(fit_predict_naive_drift(a * y + b, 6).values,
                    a * fit_predict_naive_drift(y, 6).values + b, rtol=0, atol=1e-12)


def test_naive_drift_reproduces_no_differencing_baseline(pinned):
    expected = {5: 0.073, 10: 0.154, 15: 0.137}
    for T, rmse in expected.items():
        train, test = pinned.values[:-T], pinned.values[-T:]
        pred = fit_predict_naive_drift(train, T).values
        assert np.sqrt(np.mean((test - pred) ** 2)) == pytest.approx(rmse, abs=0.02)


def test_polytrend_continues_line_and_square():
    line = 2.0 * np.arange(10) + 1.0
    assert_allclose(fit_predict_polytrend(line, 1, 2).values, [21.0, 23.0], rtol=0, atol=1e-9)
    squares = np.arange(12, dtype=float) ** 2
    assert_allclose(fit_predict_polytrend(squares, 2, 1).values, [144.0], rtol=0, atol=1e-6)


def test_polytrend_matches_normal_equations(rng):
    t = np.arange(40, dtype=float)
    y = 0.002 * t ** 3 - 0.05 * t ** 2 + 0.3 * t + 1.0 + rng.normal(scale=0.1, size=t.size)
    coef, centre, scale = polytrend_coefficients(y, 3)
    U = np.vander((t - centre) / scale, 4, increasing=True)
    oracle = np.linalg.inv(U.T @ U) @ U.T @ y
    assert_allclose(coef, oracle, rtol=0, atol=1e-6)


def test_polytrend_two_points_equals_naive_drift():
    y = [0.25, 0.65]
    assert_allclose(fit_predict_polytrend(y, 1, 4).values,
                    fit_predict_naive_drift(y, 4).values, rtol=0, atol=1e-12)
    with pytest.raises(TooShort):
        fit_predict_polytrend(y, 2, 1)


def test_expsmoothing_limits():
    y = [1.0, 4.0, 2.0, 7.0]
    assert_allclose(fit_predict_expsmoothing(y, 0.999999, 0.5, False, 3).values, [7.0] * 3, atol=1e-5)
    assert_allclose(fit_predict_expsmoothing([5.0] * 4, 0.3, 0.6, True, 3).values, [5.0] * 3)
    assert_allclose(fit_predict_expsmoothing([5.0] * 4, 0.3, 0.6, False, 3).values, [5.0] * 3)


def test_holt_matches_unrolled_recursion():
    a = b = 0.8
    level, trend = 1.0, 1.0
    for value in (2.0, 3.0, 4.0):
        new_level = a * value + (1 - a) * (level + trend)
        trend = b * (new_level - level) + (1 - b) * trend
        level = new_level
    expected = [level + trend, level + 2 * trend]
    got = fit_predict_expsmoothing([1.0, 2.0, 3.0, 4.0], a, b, True, 2).values
    assert_allclose(got, expected, rtol=0, atol=1e-12)


def test_expsmoothing_rejects_bad_inputs():
    with pytest.raises(TooShort):
        fit_predict_expsmoothing([1.0, 2.0], 0.5, 0.5, True, 1)
    with pytest.raises(DataError):
        fit_predict_expsmoothing([1.0, 2.0, 3.0], 1.0, 0.5, True, 1)


def test_ar_recovers_coefficient():
    rng = np.random.default_rng(5)
    x = np.empty(600)
    x[0] = 2.0
    for t in range(1, x.size):
        x[t] = 0.5 * x[t - 1] + 1.0 + rng.normal(scale=0.2)
    coef = fit_ar(x, 1)
    assert coef[1] == pytest.approx(0.5, abs=0.05)


def test_ar_constant_series():
    assert_allclose(fit_predict_ar([3.5] * 12, 2, 4).values, [3.5] * 4, rtol=0, atol=1e-9)


def test_ar_ramp_matches_pseudo_inverse():
    y = np.arange(1.0, 51.0)
    lags, target = ar_design(y, 1)
    X = np.column_stack([np.ones(target.size), lags])
    assert_allclose(fit_ar(y, 1), np.linalg.pinv(X) @ target, rtol=0, atol=1e-8)


def test_ar_design_orders_lags_newest_first():
    lags, target = ar_design(np.arange(6.0), 2)
    assert_array_equal(lags, [[1, 0], [2, 1], [3, 2], [4, 3]])
    assert_array_equal(target, [2, 3, 4, 5])


def test_ar_one_step_equals_regression_prediction(rng):
    y = np.cumsum(rng.normal(size=40))
    coef = fit_ar(y, 3)
    direct = coef[0] + np.array(list(y)[-1:-4:-1]) @ coef[1:]
    assert fit_predict_ar(y, 3, 1).values[0] == direct


def test_ar_needs_p_plus_five_points():
    with pytest.raises(TooShort):
        fit_ar(np.arange(7.0), 3)


def test_spec_validation_and_dispatch():
    with pytest.raises(DataError):
        ForecasterSpec(ForecasterKind.POLY_TREND, {"degree": 4})
    with pytest.raises(DataError):
        ForecasterSpec("AR", {"p": 11})
    spec = ForecasterSpec("PolyTrend", {"degree": 1})
    assert ForecasterSpec.from_dict(spec.to_dict()) == spec
    assert_allclose(fit_predict([1.0, 2.0, 3.0], spec, 2).values, [4.0, 5.0])
    assert fit_predict([1.0, 2.0], ForecasterSpec("NaiveDrift"), 1).values[0] == 3.0


def test_forecast_rejects_non_finite():
    with pytest.raises(DataError):
        Forecast(np.array([1.0, np.nan]), 2, 0)
    with pytest.raises(DataError):
        Forecast(np.array([1.0]), 2, 0)
