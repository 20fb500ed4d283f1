"""Univariate forecasters that run on the prepared (transformed) series."""
import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from errors import DataError, TooShort
from solvers import lstsq_qr, with_intercept

log = logging.getLogger(__name__)

MAX_AR_ORDER = 10


class ForecasterKind(str, Enum):
    NAIVE_DRIFT = "NaiveDrift"
    POLY_TREND = "PolyTrend"
    EXP_SMOOTHING = "ExpSmoothing"
    AR = "AR"


@dataclass(frozen=True)
class ForecasterSpec:
    kind: ForecasterKind
    hyperparams: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "kind", ForecasterKind(self.kind))
        hp = self.hyperparams
        if self.kind == ForecasterKind.POLY_TREND and hp.get("degree") not in (1, 2, 3):
            raise DataError(f"PolyTrend degree must be 1, 2 or 3, got {hp.get('degree')}")
        if self.kind == ForecasterKind.EXP_SMOOTHING:
            for name in ("alpha", "beta"):
                if not 0.0 < float(hp.get(name, -1.0)) < 1.0:
                    raise DataError(f"ExpSmoothing {name} must lie in (0, 1), got {hp.get(name)}")
        if self.kind == ForecasterKind.AR and not 1 <= int(hp.get("p", 0)) <= MAX_AR_ORDER:
            raise DataError(f"AR order must lie in [1, {MAX_AR_ORDER}], got {hp.get('p')}")

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "hyperparams": dict(self.hyperparams)}

    @classmethod
    def from_dict(cls, data: dict) -> "ForecasterSpec":
        return cls(kind=data["kind"], hyperparams=dict(data.get("hyperparams", {})))


@dataclass(frozen=True, eq=False)
class Forecast:
    values: np.ndarray
    horizon: int
    origin: int

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if self.horizon < 1 or values.shape != (self.horizon,):
            raise DataError(f"forecast must hold {self.horizon} values, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise DataError("forecast contains non-finite values")
        object.__setattr__(self, "values", values)


def _series(train, minimum: int, what: str) -> np.ndarray:
    y = np.asarray(train, dtype=np.float64)
    if y.size < minimum:
        raise TooShort(f"{what} needs at least {minimum} training values, got {y.size}")
    return y


def _check_horizon(h: int):
    if h < 1:
        raise DataError(f"horizon must be >= 1, got {h}")


def fit_predict_naive_drift(train, h: int) -> Forecast:
    """Last value plus k times the average historical step."""
    y = _series(train, 2, "naive drift")
    _check_horizon(h)
    t = y.size
    drift = (y[-1] - y[0]) / (t - 1)
    return Forecast(y[-1] + drift * np.arange(1, h + 1), h, t - 1)


def polytrend_coefficients(train, degree: int) -> tuple[np.ndarray, float, float]:
    """Least-squares polynomial in a centred and scaled time index.

    Returns the coefficients (constant term first) with the centre and
    scale used for the index.
    """
    y = _series(train, degree + 1, f"degree-{degree} trend")
    t = y.size
    centre = (t - 1) / 2.0
    scale = max(centre, 1.0)
    u = (np.arange(t) - centre) / scale
    coef = lstsq_qr(np.vander(u, degree + 1, increasing=True), y)
    return coef, centre, scale


def fit_predict_polytrend(train, degree: int, h: int) -> Forecast:
    _check_horizon(h)
    coef, centre, scale = polytrend_coefficients(train, degree)
    t = len(train)
    u = (np.arange(t, t + h) - centre) / scale
    return Forecast(np.vander(u, degree + 1, increasing=True) @ coef, h, t - 1)


def fit_predict_expsmoothing(train, alpha: float, beta: float, use_trend: bool, h: int) -> Forecast:
    """Simple exponential smoothing, or Holt's linear trend when ``use_trend``.

    Initial level is the first observation, initial trend the first step.
    """
    y = _series(train, 3, "exponential smoothing")
    _check_horizon(h)
    if not (0.0 < alpha < 1.0 and 0.0 < beta < 1.0):
        raise DataError(f"alpha and beta must lie in (0, 1), got {alpha}, {beta}")
    level, trend = y[0], y[1] - y[0]
    for value in y[1:]:
        if use_trend:
            previous = level
            level = alpha * value + (1.0 - alpha) * (level + trend)
            trend = beta * (level - previous) + (1.0 - beta) * trend
        else:
            level = alpha * value + (1.0 - alpha) * level
    steps = np.arange(1, h + 1)
    values = level + steps * trend if use_trend else np.full(h, level)
    return Forecast(values, h, y.size - 1)


def ar_design(y: np.ndarray, p: int) -> tuple[np.ndarray, np.ndarray]:
    """Rows [y_{t-1}, ..., y_{t-p}] with targets y_t for t = p..n-1."""
    lags = np.column_stack([y[p - j - 1:y.size - j - 1] for j in range(p)])
    return lags, y[p:]


def fit_ar(train, p: int) -> np.ndarray:
    """AR(p) coefficients [intercept, phi_1, ..., phi_p] by least squares."""
    if not 1 <= p <= MAX_AR_ORDER:
        raise DataError(f"AR order must lie in [1, {MAX_AR_ORDER}], got {p}")
    y = _series(train, p + 5, f"AR({p})")
    if np.ptp(y) == 0:
        # a constant target is reproduced exactly by the intercept
        return np.concatenate(([y[0]], np.zeros(p)))
    lags, target = ar_design(y, p)
    return lstsq_qr(with_intercept(lags), target)


def fit_predict_ar(train, p: int, h: int) -> Forecast:
    """AR(p) forecasts produced recursively, feeding predictions back as lags."""
    _check_horizon(h)
    coef = fit_ar(train, p)
    history = list(np.asarray(train, dtype=np.float64))
    out = []
    for _ in range(h):
        recent = np.array(history[-1:-p - 1:-1])
        value = coef[0] + recent @ coef[1:]
        out.append(value)
        history.append(value)
    return Forecast(np.array(out), h, len(train) - 1)


def fit_predict(train, spec: ForecasterSpec, h: int) -> Forecast:
    hp = spec.hyperparams
    if spec.kind == ForecasterKind.NAIVE_DRIFT:
        return fit_predict_naive_drift(train, h)
    if spec.kind == ForecasterKind.POLY_TREND:
        return fit_predict_polytrend(train, int(hp["degree"]), h)
    if spec.kind == ForecasterKind.EXP_SMOOTHING:
        return fit_predict_expsmoothing(train, float(hp["alpha"]), float(hp["beta"]),
                                        bool(hp["use_trend"]), h)
    return fit_predict_ar(train, int(hp["p"]), h)
