"""Unit-root (ADF) and level-stationarity (KPSS) diagnostics."""
import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from statsmodels.tools.sm_exceptions import InterpolationWarning
from statsmodels.tsa.stattools import adfuller, kpss

from errors import DataError, SingularRegression, TooShort

log = logging.getLogger(__name__)

MIN_TEST_LEN = 20
ADF_CRITICAL = {"1%": -3.43, "5%": -2.86, "10%": -2.57}
KPSS_CRITICAL = {"1%": 0.739, "5%": 0.463, "10%": 0.347}


@dataclass(frozen=True)
class TestResult:
    test: str
    statistic: float
    lags: int
    crit_values: dict = field(default_factory=dict)
    reject_at_5pct: bool = False

    __test__ = False  # not a pytest class

    @property
    def stationary(self) -> bool:
        # ADF rejects a unit root; KPSS rejects stationarity.
        return self.reject_at_5pct if self.test == "ADF" else not self.reject_at_5pct

    @property
    def verdict(self) -> str:
        return "stationary" if self.stationary else "non-stationary"

    def to_dict(self) -> dict:
        return {"test": self.test, "statistic": self.statistic, "lags": self.lags,
                "crit_values": dict(self.crit_values),
                "reject_at_5pct": self.reject_at_5pct, "verdict": self.verdict}


def _series(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DataError(f"stationarity tests need a 1-D series, got shape {x.shape}")
    if x.size < MIN_TEST_LEN:
        raise TooShort(f"stationarity tests need at least {MIN_TEST_LEN} observations, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise DataError("series contains non-finite values")
    return x


def schwert_lags(n: int) -> int:
    """floor(12 * (n/100)^(1/4)), capped so the ADF regression stays estimable."""
    return min(int(math.floor(12.0 * (n / 100.0) ** 0.25)), n // 2 - 2)


def newey_west_bandwidth(n: int) -> int:
    return int(math.floor(4.0 * (n / 100.0) ** 0.25))


def adf_test(x) -> TestResult:
    """Constant-only augmented Dickey-Fuller test with a fixed lag order."""
    x = _series(x)
    p = schwert_lags(x.size)
    try:
        statistic = adfuller(x, maxlag=p, regression="c", autolag=None)[0]
    except (ValueError, np.linalg.LinAlgError) as e:
        raise SingularRegression(f"ADF regression could not be estimated: {e}") from e
    if not math.isfinite(statistic):
        raise SingularRegression("ADF regression produced a non-finite t-ratio")
    result = TestResult(test="ADF", statistic=float(statistic), lags=p,
                        crit_values=dict(ADF_CRITICAL),
                        reject_at_5pct=bool(statistic < ADF_CRITICAL["5%"]))
    log.debug("ADF: statistic %.4f with %d lags -> %s", result.statistic, p, result.verdict)
    return result


def kpss_test(x) -> TestResult:
    """Level-stationarity KPSS test with a Newey-West (Bartlett) long-run variance."""
    x = _series(x)
    bandwidth = newey_west_bandwidth(x.size)
    with warnings.catch_warnings():
        # p-values outside the lookup table are irrelevant here
        warnings.simplefilter("ignore", InterpolationWarning)
        statistic = kpss(x, regression="c", nlags=bandwidth)[0]
    if not math.isfinite(statistic):
        raise DataError("KPSS statistic is not finite (constant series?)")
    result = TestResult(test="KPSS", statistic=float(statistic), lags=bandwidth,
                        crit_values=dict(KPSS_CRITICAL),
                        reject_at_5pct=bool(statistic > KPSS_CRITICAL["5%"]))
    log.debug("KPSS: statistic %.4f with bandwidth %d -> %s", result.statistic, bandwidth, result.verdict)
    return result


def stationarity_report(x) -> dict:
    """Both tests on the series and on its first difference."""
    x = _series(x)
    diffed = np.diff(x)
    return {
        "raw": {"adf": adf_test(x).to_dict(), "kpss": kpss_test(x).to_dict()},
        "differenced": {"adf": adf_test(diffed).to_dict(), "kpss": kpss_test(diffed).to_dict()},
    }
