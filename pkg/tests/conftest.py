from pathlib import Path

import numpy as np
import pytest

from ingest import AnnualSeries, load_gistemp

ROOT = Path(__file__).resolve().parents[1]
DATA_PATH = ROOT / "data" / "gistemp_land_ocean_1880_2020.csv"
BENCHMARK_GRID = ROOT / "benchmark_grid.json"


@pytest.fixture(scope="session")
def pinned() -> AnnualSeries:
    return load_gistemp(DATA_PATH)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20210)


@pytest.fixture
def make_series():
    def _make(values, start: int = 1900) -> AnnualSeries:
        values = np.asarray(values, dtype=float)
        return AnnualSeries(years=np.arange(start, start + values.size), values=values)
    return _make
