"""Lag-window regression: embed a series, fit a regressor, forecast recursively."""
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Protocol

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from errors import (DataError, KTooLarge, SingularRegression, TooShort,
                    WindowTooLarge)
from forecast import Forecast
from solvers import lstsq_qr, with_intercept

log = logging.getLogger(__name__)

MAX_TREE_DEPTH = 12
_SPLIT_TOL = 1e-12


class RegressorKind(str, Enum):
    OLS = "OLS"
    RIDGE = "Ridge"
    KNN = "KNN"
    CART = "CART"


class Weighting(str, Enum):
    UNIFORM = "uniform"
    DISTANCE = "distance"


@dataclass(frozen=True, eq=False)
class LagMatrix:
    X: np.ndarray
    y: np.ndarray
    W: int

    @property
    def rows(self) -> int:
        return self.X.shape[0]


@dataclass(frozen=True)
class RegressorSpec:
    kind: RegressorKind
    hyperparams: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "kind", RegressorKind(self.kind))
        hp = self.hyperparams
        if self.kind == RegressorKind.RIDGE and float(hp.get("alpha", -1.0)) < 0:
            raise DataError(f"ridge alpha must be >= 0, got {hp.get('alpha')}")
        if self.kind == RegressorKind.KNN:
            if int(hp.get("k", 0)) < 1:
                raise DataError(f"KNN k must be >= 1, got {hp.get('k')}")
            Weighting(hp.get("weighting", Weighting.UNIFORM.value))
        if self.kind == RegressorKind.CART:
            if not 1 <= int(hp.get("max_depth", 0)) <= MAX_TREE_DEPTH:
                raise DataError(f"max_depth must lie in [1, {MAX_TREE_DEPTH}], got {hp.get('max_depth')}")
            if int(hp.get("min_leaf", 0)) < 1:
                raise DataError(f"min_leaf must be >= 1, got {hp.get('min_leaf')}")

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "hyperparams": dict(self.hyperparams)}

    @classmethod
    def from_dict(cls, data: dict) -> "RegressorSpec":
        return cls(kind=data["kind"], hyperparams=dict(data.get("hyperparams", {})))


class Regressor(Protocol):
    def predict_one(self, q: np.ndarray) -> float: ...
    def summary(self) -> dict: ...


def embed(series, W: int) -> LagMatrix:
    """Row i holds series[i:i+W] (oldest first); target is series[i+W]."""
    s = np.asarray(series, dtype=np.float64)
    if not 1 <= W < s.size:
        raise WindowTooLarge(f"window {W} needs a series longer than {W}, got {s.size} values")
    X = sliding_window_view(s, W)[:-1].copy()
    return LagMatrix(X=X, y=s[W:].copy(), W=W)

# --- Linear models ---

@dataclass(frozen=True, eq=False)
class LinearModel:
    coef: np.ndarray  # intercept first

    def predict_one(self, q) -> float:
        return float(self.coef[0] + np.asarray(q, dtype=np.float64) @ self.coef[1:])

    def summary(self) -> dict:
        return {"intercept": float(self.coef[0]), "coefficients": self.coef[1:].tolist()}


def fit_ols(L: LagMatrix) -> np.ndarray:
    """Least squares with intercept; returns W+1 coefficients, intercept first."""
    if L.rows < L.W + 1:
        raise SingularRegression(f"{L.rows} rows cannot determine {L.W + 1} coefficients")
    if np.ptp(L.y) == 0:
        return np.concatenate(([L.y[0]], np.zeros(L.W)))
    return lstsq_qr(with_intercept(L.X), L.y)


def fit_ridge(L: LagMatrix, alpha: float) -> np.ndarray:
    """Solves (XᵀX + αI)β = Xᵀy on centred data; the intercept is unpenalized."""
    if alpha < 0:
        raise DataError(f"ridge alpha must be >= 0, got {alpha}")
    if L.rows < 2:
        raise TooShort(f"ridge needs at least 2 rows, got {L.rows}")
    if alpha == 0:
        return fit_ols(L)
    x_mean, y_mean = L.X.mean(axis=0), L.y.mean()
    Xc, yc = L.X - x_mean, L.y - y_mean
    gram = Xc.T @ Xc + alpha * np.eye(L.W)
    beta = np.linalg.solve(gram, Xc.T @ yc)
    return np.concatenate(([y_mean - x_mean @ beta], beta))

# --- K nearest neighbours ---

def knn_neighbours(L: LagMatrix, q, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Indices and Euclidean distances of the k nearest rows; ties go to the lower row."""
    if k < 1 or k > L.rows:
        raise KTooLarge(f"k={k} must lie in [1, {L.rows}]")
    q = np.asarray(q, dtype=np.float64)
    if q.shape != (L.W,):
        raise DataError(f"query must have {L.W} lags, got shape {q.shape}")
    # cumsum accumulates lag by lag, oldest first
    dist = np.sqrt(np.cumsum((L.X - q) ** 2, axis=1)[:, -1])
    idx = np.argsort(dist, kind="stable")[:k]
    return idx, dist[idx]


def _ordered_sum(values: np.ndarray) -> float:
    """Left-to-right sum in neighbour order."""
    return float(np.cumsum(values)[-1])


def predict_knn(L: LagMatrix, q, k: int, weighting: Weighting | str = Weighting.UNIFORM) -> float:
    idx, dist = knn_neighbours(L, q, k)
    weighting = Weighting(weighting)
    if weighting == Weighting.UNIFORM:
        return _ordered_sum(L.y[idx]) / k
    exact = np.flatnonzero(dist == 0.0)
    if exact.size:
        return float(L.y[idx[exact[0]]])
    return _ordered_sum(L.y[idx] / dist) / _ordered_sum(1.0 / dist)


@dataclass(frozen=True, eq=False)
class KNNModel:
    lags: LagMatrix
    k: int
    weighting: Weighting

    def predict_one(self, q) -> float:
        return predict_knn(self.lags, q, self.k, self.weighting)

    def summary(self) -> dict:
        return {"k": self.k, "weighting": self.weighting.value, "rows": self.lags.rows}

# --- Regression tree ---

@dataclass(eq=False)
class TreeNode:
    value: float
    samples: int
    feature: int = -1
    threshold: float = 0.0
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.left is None

    def to_dict(self) -> dict:
        if self.is_leaf:
            return {"value": self.value, "samples": self.samples}
        return {"feature": self.feature, "threshold": self.threshold, "samples": self.samples,
                "left": self.left.to_dict(), "right": self.right.to_dict()}


def _sse(y: np.ndarray) -> float:
    return float(np.sum((y - y.mean()) ** 2)) if y.size else 0.0


def best_split(X: np.ndarray, y: np.ndarray, min_leaf: int) -> tuple[int, float, float] | None:
    """Greedy variance-reduction split over every (feature, midpoint) candidate.

    Returns (feature, threshold, children_sse) or None if no admissible split
    reduces the error. Ties go to the lower feature, then the lower threshold.
    """
    n = y.size
    parent = _sse(y)
    best = None
    best_sse = parent - _SPLIT_TOL * (1.0 + parent)
    sizes = np.arange(1, n)
    for f in range(X.shape[1]):
        order = np.argsort(X[:, f], kind="stable")
        xs, ys = X[order, f], y[order]
        csum, csum2 = np.cumsum(ys), np.cumsum(ys ** 2)
        left = csum2[:-1] - csum[:-1] ** 2 / sizes
        right_sum = csum[-1] - csum[:-1]
        right = (csum2[-1] - csum2[:-1]) - right_sum ** 2 / (n - sizes)
        total = left + right
        valid = (xs[:-1] < xs[1:]) & (sizes >= min_leaf) & (n - sizes >= min_leaf)
        if not valid.any():
            continue
        candidates = np.flatnonzero(valid)
        i = candidates[np.argmin(total[candidates])]
        if total[i] < best_sse:
            best_sse = float(total[i])
            best = (f, _threshold(xs[i], xs[i + 1]), best_sse)
    return best


def _threshold(lo: float, hi: float) -> float:
    """Midpoint of two adjacent sorted values, kept strictly below ``hi``.

    For neighbouring doubles the midpoint can round up to ``hi``, which would
    send every sample left.
    """
    mid = float((lo + hi) / 2.0)
    return mid if mid < hi else float(lo)


def _grow(X: np.ndarray, y: np.ndarray, depth: int, max_depth: int, min_leaf: int) -> TreeNode:
    node = TreeNode(value=float(y.mean()), samples=int(y.size))
    if depth >= max_depth or y.size < 2 * min_leaf or np.ptp(y) == 0:
        return node
    split = best_split(X, y, min_leaf)
    if split is None:
        return node
    node.feature, node.threshold, _ = split
    mask = X[:, node.feature] <= node.threshold
    node.left = _grow(X[mask], y[mask], depth + 1, max_depth, min_leaf)
    node.right = _grow(X[~mask], y[~mask], depth + 1, max_depth, min_leaf)
    return node


def fit_cart(L: LagMatrix, max_depth: int, min_leaf: int) -> TreeNode:
    if not 1 <= max_depth <= MAX_TREE_DEPTH:
        raise DataError(f"max_depth must lie in [1, {MAX_TREE_DEPTH}], got {max_depth}")
    if min_leaf < 1:
        raise DataError(f"min_leaf must be >= 1, got {min_leaf}")
    if L.rows < 2 * min_leaf:
        raise TooShort(f"tree with min_leaf={min_leaf} needs at least {2 * min_leaf} rows, got {L.rows}")
    return _grow(L.X, L.y, 0, max_depth, min_leaf)


def predict_cart(tree: TreeNode, q) -> float:
    node = tree
    while not node.is_leaf:
        node = node.left if q[node.feature] <= node.threshold else node.right
    return node.value


def tree_sse(tree: TreeNode, L: LagMatrix) -> float:
    """Total squared training error of a fitted tree."""
    preds = np.array([predict_cart(tree, row) for row in L.X])
    return float(np.sum((L.y - preds) ** 2))


@dataclass(frozen=True, eq=False)
class TreeModel:
    root: TreeNode

    def predict_one(self, q) -> float:
        return predict_cart(self.root, np.asarray(q, dtype=np.float64))

    def summary(self) -> dict:
        return {"tree": self.root.to_dict()}

# --- Dispatch and multi-step ---

def fit_regressor(L: LagMatrix, spec: RegressorSpec) -> Regressor:
    hp = spec.hyperparams
    if spec.kind == RegressorKind.OLS:
        return LinearModel(fit_ols(L))
    if spec.kind == RegressorKind.RIDGE:
        return LinearModel(fit_ridge(L, float(hp["alpha"])))
    if spec.kind == RegressorKind.KNN:
        k = int(hp["k"])
        if k > L.rows:
            raise KTooLarge(f"k={k} exceeds the {L.rows} available rows")
        return KNNModel(L, k, Weighting(hp.get("weighting", Weighting.UNIFORM.value)))
    return TreeModel(fit_cart(L, int(hp["max_depth"]), int(hp["min_leaf"])))


def recursive_forecast(model: Regressor, history, W: int, h: int) -> Forecast:
    """Predicts one step from the last W values, appends it, repeats h times."""
    hist = np.asarray(history, dtype=np.float64)
    if hist.size < W:
        raise WindowTooLarge(f"history of {hist.size} values is shorter than window {W}")
    if h < 1:
        raise DataError(f"horizon must be >= 1, got {h}")
    buffer = list(hist[-W:])
    out = []
    for _ in range(h):
        value = model.predict_one(np.array(buffer[-W:]))
        out.append(value)
        buffer.append(value)
    return Forecast(np.array(out), h, hist.size - 1)
