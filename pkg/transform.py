"""Invertible data preparation: differencing, power transform, standardization.

The chain is always applied in that order and inverted in reverse. Every
parameter is fitted on the training slice only.
"""
import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import optimize, special, stats

from errors import (DataError, DegenerateData, InverseDomain, NonPositiveInput,
                    TooShort)

log = logging.getLogger(__name__)

OFFSET_EPSILON = 1e-6
LAMBDA_BOUNDS = (-5.0, 5.0)
LAMBDA_GRID_STEP = 0.05
LAMBDA_XATOL = 1e-6
MIN_TRAIN_LEN = 3
MIN_POWER_LEN = 4
_ZERO = np.spacing(1.0)


class PowerFamily(str, Enum):
    NO = "NO"
    BC = "BC"
    YJ = "YJ"


@dataclass(frozen=True)
class PrepSpec:
    diff_order: int = 0
    power: PowerFamily = PowerFamily.NO
    scale: bool = True

    def __post_init__(self):
        if self.diff_order not in (0, 1):
            raise DataError(f"diff_order must be 0 or 1, got {self.diff_order}")
        object.__setattr__(self, "power", PowerFamily(self.power))

    @property
    def key(self) -> str:
        return f"D{self.diff_order}-{self.power.value}"

    @classmethod
    def from_key(cls, key: str, scale: bool = True) -> "PrepSpec":
        """Parses keys like ``D1-YJ``."""
        try:
            diff_part, power_part = key.strip().upper().split("-")
            if not diff_part.startswith("D"):
                raise ValueError(key)
            return cls(diff_order=int(diff_part[1:]), power=PowerFamily(power_part), scale=scale)
        except ValueError as e:
            raise DataError(f"invalid prep key '{key}' (expected e.g. 'D1-YJ')") from e

    def to_dict(self) -> dict:
        return {"diff_order": self.diff_order, "power": self.power.value, "scale": self.scale}


def benchmark_preps() -> list[PrepSpec]:
    """The six differencing × power-transform combinations, all scaled."""
    return [PrepSpec(d, p) for d in (0, 1) for p in PowerFamily]


@dataclass(frozen=True)
class FittedPipeline:
    spec: PrepSpec
    lmbda: float
    offset: float
    mean: float
    std: float
    anchor: float
    train_len: int

    def to_dict(self) -> dict:
        return {"spec": self.spec.to_dict(), "lambda": self.lmbda, "offset": self.offset,
                "mean": self.mean, "std": self.std, "anchor": self.anchor,
                "train_len": self.train_len}


def _as_array(x) -> np.ndarray:
    return np.asarray(x, dtype=np.float64)

# --- Differencing ---

def difference(x) -> np.ndarray:
    x = _as_array(x)
    if x.size < 2:
        raise TooShort(f"differencing needs at least 2 values, got {x.size}")
    return np.diff(x)


def undifference(d, anchor: float) -> np.ndarray:
    """Cumulative sum from ``anchor``; exact inverse of ``difference``."""
    return float(anchor) + np.cumsum(_as_array(d))

# --- Power transforms ---

def boxcox_forward(y, lmbda: float) -> np.ndarray:
    y = _as_array(y)
    if np.any(y <= 0):
        raise NonPositiveInput(f"Box-Cox needs strictly positive input, min is {y.min():.6g}")
    if lmbda == 1.0:
        # exact at the identity exponent
        return y - 1.0
    return special.boxcox(y, lmbda)


def boxcox_inverse(x, lmbda: float) -> np.ndarray:
    x = _as_array(x)
    if lmbda == 1.0:
        return x + 1.0
    if abs(lmbda) >= _ZERO and np.any(lmbda * x + 1.0 <= 0):
        raise InverseDomain(f"Box-Cox inverse undefined: lambda*x + 1 <= 0 for lambda={lmbda:.6g}")
    return special.inv_boxcox(x, lmbda)


def yeojohnson_forward(y, lmbda: float) -> np.ndarray:
    y = _as_array(y)
    if lmbda == 1.0:
        return y.copy()
    out = np.empty_like(y)
    pos = y >= 0
    neg = ~pos
    if abs(lmbda) < _ZERO:
        out[pos] = np.log1p(y[pos])
    else:
        out[pos] = np.expm1(lmbda * np.log1p(y[pos])) / lmbda
    if abs(lmbda - 2.0) < _ZERO:
        out[neg] = -np.log1p(-y[neg])
    else:
        out[neg] = -np.expm1((2.0 - lmbda) * np.log1p(-y[neg])) / (2.0 - lmbda)
    return out


def yeojohnson_inverse(x, lmbda: float) -> np.ndarray:
    x = _as_array(x)
    if lmbda == 1.0:
        return x.copy()
    out = np.empty_like(x)
    pos = x >= 0
    neg = ~pos
    if abs(lmbda) < _ZERO:
        out[pos] = np.expm1(x[pos])
    else:
        arg = lmbda * x[pos]
        if np.any(arg <= -1.0):
            raise InverseDomain(f"Yeo-Johnson inverse undefined for lambda={lmbda:.6g}")
        out[pos] = np.expm1(np.log1p(arg) / lmbda)
    if abs(lmbda - 2.0) < _ZERO:
        out[neg] = -np.expm1(-x[neg])
    else:
        arg = -(2.0 - lmbda) * x[neg]
        if np.any(arg <= -1.0):
            raise InverseDomain(f"Yeo-Johnson inverse undefined for lambda={lmbda:.6g}")
        out[neg] = -np.expm1(np.log1p(arg) / (2.0 - lmbda))
    return out


def profile_llf(lmbda: float, y: np.ndarray, family: PowerFamily) -> float:
    """Profile Gaussian log-likelihood of the transformed data, Jacobian included."""
    if family == PowerFamily.BC:
        value = stats.boxcox_llf(lmbda, y)
    else:
        value = stats.yeojohnson_llf(lmbda, y)
    value = float(value)
    return value if np.isfinite(value) else -np.inf


def fit_lambda(y, family: PowerFamily | str) -> float:
    """Maximum-likelihood λ on [-5, 5].

    A coarse grid locates the best bracket, then a bounded golden-section
    (Brent) search refines it to a 1e-6 bracket width.
    """
    family = PowerFamily(family)
    if family == PowerFamily.NO:
        raise DataError("fit_lambda needs a power family (BC or YJ)")
    y = _as_array(y)
    if y.size < MIN_POWER_LEN:
        raise TooShort(f"lambda estimation needs at least {MIN_POWER_LEN} values, got {y.size}")
    if family == PowerFamily.BC and np.any(y <= 0):
        raise NonPositiveInput("Box-Cox lambda estimation needs strictly positive input")
    if np.ptp(y) == 0:
        raise DegenerateData("transformed data has zero variance for every lambda")

    lo, hi = LAMBDA_BOUNDS
    grid = np.linspace(lo, hi, int(round((hi - lo) / LAMBDA_GRID_STEP)) + 1)
    llf = np.array([profile_llf(lm, y, family) for lm in grid])
    if not np.any(np.isfinite(llf)):
        raise DegenerateData("log-likelihood is not finite anywhere on the lambda range")
    best = int(np.argmax(llf))
    bracket = (grid[max(best - 1, 0)], grid[min(best + 1, grid.size - 1)])

    result = optimize.minimize_scalar(lambda lm: -profile_llf(lm, y, family),
                                      bounds=bracket, method="bounded",
                                      options={"xatol": LAMBDA_XATOL})
    lmbda = float(result.x)
    if -result.fun < llf[best]:
        lmbda = float(grid[best])
    log.debug("Fitted %s lambda=%.6f on %d values.", family.value, lmbda, y.size)
    return lmbda

# --- Pipeline ---

def _power_forward(p: FittedPipeline, x: np.ndarray) -> np.ndarray:
    if p.spec.power == PowerFamily.BC:
        return boxcox_forward(x + p.offset, p.lmbda)
    if p.spec.power == PowerFamily.YJ:
        return yeojohnson_forward(x, p.lmbda)
    return x


def _power_inverse(p: FittedPipeline, x: np.ndarray) -> np.ndarray:
    if p.spec.power == PowerFamily.BC:
        return boxcox_inverse(x, p.lmbda) - p.offset
    if p.spec.power == PowerFamily.YJ:
        return yeojohnson_inverse(x, p.lmbda)
    return x


def fit_pipeline(train, spec: PrepSpec) -> FittedPipeline:
    train = _as_array(train)
    if train.size < MIN_TRAIN_LEN:
        raise TooShort(f"pipeline needs at least {MIN_TRAIN_LEN} training values, got {train.size}")

    x = difference(train) if spec.diff_order == 1 else train
    lmbda, offset = 1.0, 0.0
    if spec.power == PowerFamily.BC:
        x_min = float(x.min())
        if x_min <= 0:
            offset = abs(x_min) + OFFSET_EPSILON
        lmbda = fit_lambda(x + offset, PowerFamily.BC)
        x = boxcox_forward(x + offset, lmbda)
    elif spec.power == PowerFamily.YJ:
        lmbda = fit_lambda(x, PowerFamily.YJ)
        x = yeojohnson_forward(x, lmbda)

    mean, std = 0.0, 1.0
    if spec.scale:
        mean, std = float(np.mean(x)), float(np.std(x))
        if not std > 0:
            raise DegenerateData(f"prepared training data for {spec.key} has zero variance")

    p = FittedPipeline(spec=spec, lmbda=lmbda, offset=offset, mean=mean, std=std,
                       anchor=float(train[-1]), train_len=int(train.size))
    log.debug("Fitted pipeline %s: lambda=%.4f offset=%.3g mean=%.4f std=%.4f",
              spec.key, lmbda, offset, mean, std)
    return p


def apply(p: FittedPipeline, x, anchor: float | None = None) -> np.ndarray:
    """Transforms a continuation of the training data with frozen parameters.

    For first-order differencing the continuation is differenced against
    ``anchor`` (the final training value unless given).
    """
    x = _as_array(x)
    if p.spec.diff_order == 1:
        start = p.anchor if anchor is None else float(anchor)
        x = np.diff(np.concatenate(([start], x)))
    x = _power_forward(p, x)
    return (x - p.mean) / p.std


def fit_transform(train, spec: PrepSpec) -> tuple[FittedPipeline, np.ndarray]:
    """Fits the pipeline and returns it with the prepared training series."""
    train = _as_array(train)
    p = fit_pipeline(train, spec)
    if spec.diff_order == 1:
        return p, apply(p, train[1:], anchor=train[0])
    return p, apply(p, train)


def invert_forecast(p: FittedPipeline, z, anchor: float | None = None) -> np.ndarray:
    """Maps a forecast in prepared space back to the original scale."""
    z = _as_array(z)
    if z.size < 1:
        raise DataError("forecast to invert is empty")
    x = _power_inverse(p, z * p.std + p.mean)
    if p.spec.diff_order == 1:
        x = undifference(x, p.anchor if anchor is None else anchor)
    return x
