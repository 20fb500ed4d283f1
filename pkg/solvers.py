"""Least-squares kernel shared by the trend, AR and lag-regression models."""
import numpy as np
from scipy import linalg

from errors import SingularRegression

PIVOT_TOLERANCE = 1e-12


def lstsq_qr(X, y) -> np.ndarray:
    """Solves min ||X b - y|| by Householder QR.

    Raises SingularRegression when a diagonal entry of R falls below
    PIVOT_TOLERANCE times the largest one.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    rows, cols = X.shape
    if rows < cols:
        raise SingularRegression(f"underdetermined system: {rows} rows for {cols} coefficients")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise SingularRegression("design matrix or target contains non-finite values")
    Q, R = np.linalg.qr(X, mode="reduced")
    pivots = np.abs(np.diag(R))
    scale = pivots.max() if pivots.size else 0.0
    if scale == 0.0 or pivots.min() < PIVOT_TOLERANCE * scale:
        raise SingularRegression("design matrix is rank deficient")
    return linalg.solve_triangular(R, Q.T @ y, lower=False)


def with_intercept(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    return np.column_stack([np.ones(X.shape[0]), X])
