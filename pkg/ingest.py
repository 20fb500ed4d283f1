"""GISTEMP parsing, descriptive statistics and outlier flags."""
import io
import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import TextIO

import numpy as np
import pandas as pd
from sklearn.ensemble import IsolationForest

from config import DEFAULT_COLUMN
from errors import (DataError, EmptySeries, MissingColumn, NonConsecutiveYears,
                    TooShort)

log = logging.getLogger(__name__)

PREAMBLE = "Land-Ocean: Global Means"
MISSING_MARKER = "***"
IQR_MULTIPLIER = 1.5
IFOREST_MAX_SAMPLES = 64


def _frozen(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class AnnualSeries:
    """Consecutive annual observations (calendar year, anomaly in °C)."""
    years: np.ndarray
    values: np.ndarray
    column: str = DEFAULT_COLUMN

    def __post_init__(self):
        years = _frozen(self.years, np.int64)
        values = _frozen(self.values, np.float64)
        if years.ndim != 1 or values.ndim != 1 or len(years) != len(values):
            raise DataError("years and values must be 1-D arrays of equal length")
        if len(years) < 2:
            raise TooShort(f"an annual series needs at least 2 observations, got {len(years)}")
        if not np.all(np.isfinite(values)):
            raise DataError("series values must be finite")
        gaps = np.flatnonzero(np.diff(years) != 1)
        if gaps.size:
            i = int(gaps[0])
            raise NonConsecutiveYears(f"years jump from {years[i]} to {years[i + 1]}")
        object.__setattr__(self, "years", years)
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return len(self.values)

    def to_csv(self) -> str:
        """Serializes back to the GISTEMP CSV layout (preamble, header, rows)."""
        lines = [PREAMBLE, f"Year,{self.column}"]
        lines.extend(f"{int(y)},{float(v)!r}" for y, v in zip(self.years, self.values))
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {"column": self.column, "n": self.n,
                "first_year": int(self.years[0]), "last_year": int(self.years[-1])}


@dataclass(frozen=True)
class DescriptiveStats:
    count: int
    mean: float
    std: float
    min: float
    q25: float
    median: float
    q75: float
    max: float
    kurtosis: float
    skewness: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


class OutlierMethod(str, Enum):
    IQR = "IQR"
    ISOLATION_FOREST = "IsolationForest"


@dataclass(frozen=True)
class OutlierReport:
    method: OutlierMethod
    flagged_years: tuple[int, ...]
    scores: tuple[float, ...] = field(repr=False)

    def to_dict(self) -> dict:
        return {"method": self.method.value,
                "flagged_years": list(self.flagged_years),
                "scores": list(self.scores)}


def parse_gistemp(text: str | TextIO, column: str = DEFAULT_COLUMN) -> AnnualSeries:
    """Parses a GISTEMP Land-Ocean Temperature Index CSV.

    Lines before the first row whose first field is ``Year`` are preamble.
    Rows whose selected column does not parse as a number (the ``***``
    marker for incomplete years) are dropped; a gap left behind by a
    dropped row raises NonConsecutiveYears.
    """
    raw = text if isinstance(text, str) else text.read()
    lines = raw.splitlines()
    header_idx = next((i for i, line in enumerate(lines)
                       if line.split(",", 1)[0].strip() == "Year"), None)
    if header_idx is None:
        raise MissingColumn(f"no header row starting with 'Year' (looking for column '{column}')")

    frame = pd.read_csv(io.StringIO("\n".join(lines[header_idx:])), dtype=str,
                        skipinitialspace=True, keep_default_na=False)
    frame.columns = [c.strip() for c in frame.columns]
    if column not in frame.columns:
        raise MissingColumn(f"column '{column}' not in header {list(frame.columns)}")

    years = pd.to_numeric(frame["Year"].str.strip(), errors="coerce")
    values = pd.to_numeric(frame[column].str.strip(), errors="coerce")
    # Repeated header rows and missing markers both fail to parse.
    keep = years.notna() & values.notna()
    dropped = frame.loc[years.notna() & values.isna(), "Year"].tolist()
    if dropped:
        log.info("Dropped %d year(s) with missing '%s' values: %s", len(dropped), column, dropped)
    if not keep.any():
        raise EmptySeries(f"no parsable rows for column '{column}'")

    series = AnnualSeries(years=years[keep].astype(np.int64).to_numpy(),
                          values=values[keep].to_numpy(dtype=np.float64),
                          column=column)
    log.info("Parsed %d annual values (%d-%d) from column '%s'.",
             series.n, series.years[0], series.years[-1], column)
    return series


def load_gistemp(path: str | Path, column: str = DEFAULT_COLUMN) -> AnnualSeries:
    """Reads and parses a GISTEMP CSV file from disk."""
    data_path = Path(path)
    try:
        text = data_path.read_text(encoding="utf-8")
    except OSError as e:
        log.error("Could not read data file '%s': %s", data_path, e)
        raise DataError(f"could not read data file {data_path}: {e}") from e
    return parse_gistemp(text, column=column)


def _require(s: AnnualSeries, minimum: int, what: str):
    if s.n < minimum:
        raise TooShort(f"{what} needs at least {minimum} observations, got {s.n}")


def describe(s: AnnualSeries) -> DescriptiveStats:
    """Table-style descriptive statistics.

    Sample std (n-1), adjusted Fisher-Pearson skewness, unbiased excess
    kurtosis, linearly interpolated quartiles. A constant series reports
    skewness and kurtosis as 0.
    """
    _require(s, 4, "describe")
    values = pd.Series(s.values)
    q25, median, q75 = values.quantile([0.25, 0.5, 0.75], interpolation="linear").tolist()
    degenerate = np.ptp(s.values) == 0
    return DescriptiveStats(
        count=int(values.count()),
        mean=float(values.mean()),
        std=0.0 if degenerate else float(values.std(ddof=1)),
        min=float(values.min()),
        q25=float(q25),
        median=float(median),
        q75=float(q75),
        max=float(values.max()),
        kurtosis=0.0 if degenerate else float(values.kurt()),
        skewness=0.0 if degenerate else float(values.skew()),
    )


def iqr_fences(values: np.ndarray) -> tuple[float, float]:
    q25, q75 = np.quantile(values, [0.25, 0.75])
    iqr = q75 - q25
    return float(q25 - IQR_MULTIPLIER * iqr), float(q75 + IQR_MULTIPLIER * iqr)


def detect_outliers_iqr(s: AnnualSeries) -> OutlierReport:
    """Flags values outside the 1.5·IQR fences.

    Scores are the signed distance beyond the nearest fence, 0 inside.
    """
    _require(s, 4, "IQR outlier detection")
    lower, upper = iqr_fences(s.values)
    scores = np.where(s.values > upper, s.values - upper,
                      np.where(s.values < lower, s.values - lower, 0.0))
    flagged = s.years[scores != 0.0]
    log.info("IQR fences [%.4f, %.4f] flag %d year(s).", lower, upper, flagged.size)
    return OutlierReport(method=OutlierMethod.IQR,
                         flagged_years=tuple(int(y) for y in flagged),
                         scores=tuple(float(v) for v in scores))


def detect_outliers_iforest(s: AnnualSeries, trees: int = 200, seed: int = 7) -> OutlierReport:
    """Isolation-forest anomaly scores in [0, 1] for every observation.

    The flagged set is the top-k scores where k is the number of IQR flags,
    so the two detectors can be compared side by side. Score ties go to the
    earlier year.
    """
    _require(s, 8, "isolation-forest outlier detection")
    if trees < 1:
        raise DataError(f"trees must be >= 1, got {trees}")
    forest = IsolationForest(n_estimators=trees,
                             max_samples=min(IFOREST_MAX_SAMPLES, s.n),
                             random_state=seed)
    X = s.values.reshape(-1, 1)
    forest.fit(X)
    scores = -forest.score_samples(X)

    k = len(detect_outliers_iqr(s).flagged_years)
    order = np.argsort(-scores, kind="stable")[:k]
    flagged = sorted(int(s.years[i]) for i in order)
    log.info("Isolation forest (%d trees, seed %d) flags top %d year(s): %s", trees, seed, k, flagged)
    return OutlierReport(method=OutlierMethod.ISOLATION_FOREST,
                         flagged_years=tuple(flagged),
                         scores=tuple(float(v) for v in scores))
