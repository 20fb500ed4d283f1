"""Model roster: codes, declared search spaces, and original-scale forecasting.

A model family fits the prep pipeline on a training slice, fits the model in
prepared space, forecasts, and inverts the forecast back to °C.
"""
import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import stats

from errors import ConfigError
from forecast import ForecasterKind, ForecasterSpec, fit_predict
from lagreg import (RegressorKind, RegressorSpec, embed, fit_regressor,
                    recursive_forecast)
from transform import PrepSpec, fit_transform, invert_forecast

log = logging.getLogger(__name__)

MAX_WINDOW = 50


class ModelClass(str, Enum):
    TIME_SERIES = "time_series"
    REGRESSION = "regression"


@dataclass(frozen=True)
class ModelSpec:
    code: str
    name: str
    model_class: ModelClass
    kind: str

    @property
    def is_regression(self) -> bool:
        return self.model_class == ModelClass.REGRESSION

    def to_dict(self) -> dict:
        return {"code": self.code, "name": self.name,
                "class": self.model_class.value, "kind": self.kind}


MODELS = {
    "NAV": ModelSpec("NAV", "Naive (drift)", ModelClass.TIME_SERIES, ForecasterKind.NAIVE_DRIFT.value),
    "POT": ModelSpec("POT", "Polynomial Trend", ModelClass.TIME_SERIES, ForecasterKind.POLY_TREND.value),
    "EXS": ModelSpec("EXS", "Exponential Smoothing", ModelClass.TIME_SERIES, ForecasterKind.EXP_SMOOTHING.value),
    "ARI": ModelSpec("ARI", "Autoregression", ModelClass.TIME_SERIES, ForecasterKind.AR.value),
    "LIN": ModelSpec("LIN", "Linear Regression", ModelClass.REGRESSION, RegressorKind.OLS.value),
    "RID": ModelSpec("RID", "Ridge Regression", ModelClass.REGRESSION, RegressorKind.RIDGE.value),
    "KNN": ModelSpec("KNN", "K Neighbors Regressor", ModelClass.REGRESSION, RegressorKind.KNN.value),
    "DTR": ModelSpec("DTR", "Decision Tree Regressor", ModelClass.REGRESSION, RegressorKind.CART.value),
}

_WINDOWS = list(range(1, MAX_WINDOW + 1))

# Lists are sampled as discrete choices, scipy distributions through rvs().
SEARCH_SPACES = {
    "NAV": {},
    "POT": {"degree": [1, 2, 3]},
    "EXS": {"alpha": stats.uniform(loc=0.01, scale=0.98),
            "beta": stats.uniform(loc=0.01, scale=0.98),
            "use_trend": [True, False]},
    "ARI": {"p": list(range(1, 11))},
    "LIN": {"window": _WINDOWS},
    "RID": {"window": _WINDOWS, "alpha": stats.loguniform(1e-4, 1e2)},
    "KNN": {"window": _WINDOWS, "k": list(range(1, 26)), "weighting": ["uniform", "distance"]},
    "DTR": {"window": _WINDOWS, "max_depth": list(range(1, 13)), "min_leaf": list(range(1, 11))},
}


def get_model(code: str) -> ModelSpec:
    try:
        return MODELS[code.upper()]
    except KeyError:
        raise ConfigError(f"unknown model code '{code}' (known: {', '.join(MODELS)})") from None


def search_space(code: str) -> dict:
    return SEARCH_SPACES[get_model(code).code]


@dataclass(frozen=True)
class FitOutcome:
    forecast: np.ndarray
    pipeline: dict
    model: dict


class RosterFamily:
    """Original-scale forecasting for one (model, prep) pair."""

    def __init__(self, model: ModelSpec, prep: PrepSpec):
        self.model = model
        self.prep = prep
        self._prepared: dict[bytes, tuple] = {}

    def prepare(self, train: np.ndarray):
        """Fitted pipeline and prepared series for a training slice.

        The pipeline depends only on the slice, so each fold's fit is shared
        by every candidate of the search.
        """
        train = np.asarray(train, dtype=np.float64)
        key = train.tobytes()
        cached = self._prepared.get(key)
        if cached is None:
            cached = fit_transform(train, self.prep)
            self._prepared[key] = cached
            log.debug("Prepared %s on %d values.", self.prep.key, train.size)
        pipeline, z = cached
        return pipeline, z.copy()

    def fit(self, params: dict, train: np.ndarray, h: int) -> FitOutcome:
        pipeline, z = self.prepare(train)
        if self.model.is_regression:
            W = int(params["window"])
            lags = embed(z, W)
            hp = {k: v for k, v in params.items() if k != "window"}
            regressor = fit_regressor(lags, RegressorSpec(self.model.kind, hp))
            prepared = recursive_forecast(regressor, z, W, h)
            summary = {"window": W, **regressor.summary()}
        else:
            spec = ForecasterSpec(self.model.kind, dict(params))
            prepared = fit_predict(z, spec, h)
            summary = spec.to_dict()
        values = invert_forecast(pipeline, prepared.values)
        return FitOutcome(forecast=values, pipeline=pipeline.to_dict(), model=summary)

    def forecast(self, params: dict, train: np.ndarray, h: int) -> np.ndarray:
        return self.fit(params, train, h).forecast

    def n_params(self, params: dict) -> int:
        """Effective parameter count, used to break CV-score ties."""
        code = self.model.code
        if code == "NAV":
            return 0
        if code == "POT":
            return int(params["degree"]) + 1
        if code == "EXS":
            return 2 if params["use_trend"] else 1
        if code == "ARI":
            return int(params["p"]) + 1
        if code == "KNN":
            return int(params["window"])
        if code == "DTR":
            return int(params["window"]) + 2 ** int(params["max_depth"])
        return int(params["window"]) + 1
