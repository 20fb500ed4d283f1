"""Expanding-window cross-validation, seeded random search and metrics."""
import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Protocol

import numpy as np
from sklearn.model_selection import ParameterSampler

from errors import (AllCandidatesFailed, BenchError, DataError,
                    InsufficientData, LengthMismatch, NotDivisible)
from utils import to_jsonable

log = logging.getLogger(__name__)

# --- Splits ---

@dataclass(frozen=True)
class SplitPlan:
    """Fold windows as (train_end, val_start, val_end); train is [0, train_end)."""
    folds: int
    horizon: int
    fold_windows: tuple[tuple[int, int, int], ...]

    def to_dict(self) -> dict:
        return {"folds": self.folds, "horizon": self.horizon,
                "fold_windows": [list(w) for w in self.fold_windows]}


def make_splits(n_train: int, m: int, F: int = 3) -> SplitPlan:
    """The last F length-m blocks of the training region are the validation windows."""
    if m < 1 or F < 1:
        raise DataError(f"horizon and folds must be >= 1, got m={m}, F={F}")
    if n_train < (F + 1) * m:
        raise InsufficientData(
            f"{n_train} training points cannot hold {F} validation folds of {m} "
            f"plus a first training window (need >= {(F + 1) * m})")
    windows = []
    for i in range(1, F + 1):
        val_start = n_train - (F - i + 1) * m
        windows.append((val_start, val_start, val_start + m))
    return SplitPlan(folds=F, horizon=m, fold_windows=tuple(windows))

# --- Metrics ---

@dataclass(frozen=True)
class MetricSet:
    rmse: float
    rmse_of_mean: float
    block_mean_rmse: float
    mae: float
    mape: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)

    @classmethod
    def from_dict(cls, data: dict) -> "MetricSet":
        return cls(**{k: float("nan") if data[k] is None else float(data[k])
                      for k in cls.__dataclass_fields__})


def _pair(y, yhat) -> tuple[np.ndarray, np.ndarray]:
    y = np.asarray(y, dtype=np.float64)
    yhat = np.asarray(yhat, dtype=np.float64)
    if y.shape != yhat.shape or y.ndim != 1:
        raise LengthMismatch(f"observed {y.shape} and predicted {yhat.shape} differ")
    if y.size < 1:
        raise LengthMismatch("metrics need at least one observation")
    return y, yhat


def rmse(y, yhat) -> float:
    y, yhat = _pair(y, yhat)
    return math.sqrt(np.mean((y - yhat) ** 2))


def rmse_of_mean(y, yhat) -> float:
    y, yhat = _pair(y, yhat)
    return abs(float(np.mean(y)) - float(np.mean(yhat)))


def block_mean_rmse(y, yhat, block: int = 5) -> float:
    """RMSE over the means of consecutive non-overlapping blocks."""
    y, yhat = _pair(y, yhat)
    if block < 1 or y.size % block:
        raise NotDivisible(f"test window of {y.size} is not divisible into blocks of {block}")
    if block == 1:
        return rmse(y, yhat)
    if block == y.size:
        return rmse_of_mean(y, yhat)
    return rmse(y.reshape(-1, block).mean(axis=1), yhat.reshape(-1, block).mean(axis=1))


def mae(y, yhat) -> float:
    y, yhat = _pair(y, yhat)
    return float(np.mean(np.abs(y - yhat)))


def mape(y, yhat) -> float:
    """Mean absolute percentage error over non-zero observations."""
    y, yhat = _pair(y, yhat)
    nonzero = y != 0
    if not nonzero.any():
        return float("nan")
    return float(np.mean(np.abs((y[nonzero] - yhat[nonzero]) / y[nonzero])) * 100.0)


def compute_metrics(y, yhat, block: int = 5) -> MetricSet:
    return MetricSet(rmse=rmse(y, yhat), rmse_of_mean=rmse_of_mean(y, yhat),
                     block_mean_rmse=block_mean_rmse(y, yhat, block),
                     mae=mae(y, yhat), mape=mape(y, yhat))

# --- Random search ---

class SearchMethod(str, Enum):
    RANDOM = "Random"


@dataclass(frozen=True)
class SearchPolicy:
    iterations: int = 50
    method: SearchMethod = SearchMethod.RANDOM
    seed: int = 0

    def __post_init__(self):
        if self.iterations < 1:
            raise DataError(f"iterations must be >= 1, got {self.iterations}")
        object.__setattr__(self, "method", SearchMethod(self.method))


class ModelFamily(Protocol):
    """Fits on a training slice and forecasts h steps in the original scale."""

    def forecast(self, params: dict, train: np.ndarray, h: int) -> np.ndarray: ...

    def n_params(self, params: dict) -> int: ...


@dataclass
class CandidateTrace:
    draw: int
    params: dict
    fold_scores: list[float] = field(default_factory=list)
    score: float | None = None
    error: str | None = None

    def to_dict(self) -> dict:
        return to_jsonable(self.__dict__)


@dataclass
class SearchResult:
    best_params: dict
    cv_score: float
    trace: list[CandidateTrace]

    def to_dict(self) -> dict:
        return {"best_params": to_jsonable(self.best_params), "cv_score": self.cv_score,
                "trace": [t.to_dict() for t in self.trace]}


def draw_candidates(space: dict, policy: SearchPolicy) -> list[dict]:
    """Pre-draws the candidate sequence serially from the policy seed.

    All-discrete spaces are sampled without replacement, so a space no larger
    than ``iterations`` is enumerated completely.
    """
    if not space:
        return [{}]
    state = np.random.RandomState(np.random.SeedSequence(policy.seed).generate_state(4))
    with warnings.catch_warnings():
        # grid smaller than n_iter: the whole grid is returned
        warnings.simplefilter("ignore", UserWarning)
        sampler = ParameterSampler(space, n_iter=policy.iterations, random_state=state)
        return [to_jsonable(c) for c in sampler]


def cross_validate(family: ModelFamily, params: dict, splits: SplitPlan, data: np.ndarray) -> list[float]:
    """Validation RMSE of each fold, fitting only on that fold's training window."""
    scores = []
    for train_end, val_start, val_end in splits.fold_windows:
        pred = family.forecast(params, data[:train_end], val_end - val_start)
        score = rmse(data[val_start:val_end], pred)
        if not math.isfinite(score):
            raise DataError("non-finite validation RMSE")
        scores.append(score)
    return scores


def _evaluate(family: ModelFamily, draw: int, params: dict, splits: SplitPlan,
              data: np.ndarray) -> CandidateTrace:
    trace = CandidateTrace(draw=draw, params=params)
    try:
        trace.fold_scores = cross_validate(family, params, splits, data)
        trace.score = float(np.mean(trace.fold_scores))
    except (BenchError, ArithmeticError, ValueError, np.linalg.LinAlgError) as e:
        trace.error = f"{type(e).__name__}: {e}"
        log.debug("Candidate %d %s failed: %s", draw, params, trace.error)
    return trace


def random_search(family: ModelFamily, space: dict, splits: SplitPlan, policy: SearchPolicy,
                  data, workers: int = 1) -> SearchResult:
    """Seeded random search scored by mean validation RMSE across folds.

    The winner has the lowest score; ties go to fewer effective parameters,
    then to the earliest draw.
    """
    data = np.asarray(data, dtype=np.float64)
    candidates = draw_candidates(space, policy)
    jobs = [(i, c) for i, c in enumerate(candidates)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            traces = list(pool.map(lambda job: _evaluate(family, job[0], job[1], splits, data), jobs))
    else:
        traces = [_evaluate(family, i, c, splits, data) for i, c in jobs]

    scored = [t for t in traces if t.score is not None]
    if not scored:
        raise AllCandidatesFailed(
            f"all {len(traces)} candidates failed; first error: {traces[0].error}")
    best = min(scored, key=lambda t: (t.score, family.n_params(t.params), t.draw))
    log.debug("Random search: %d/%d candidates scored, best %s (CV RMSE %.4f).",
              len(scored), len(traces), best.params, best.score)
    return SearchResult(best_params=best.params, cv_score=best.score, trace=traces)
