import io

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from errors import EmptySeries, MissingColumn, NonConsecutiveYears, TooShort
from ingest import (AnnualSeries, OutlierMethod, describe, detect_outliers_iforest,
                    detect_outliers_iqr, iqr_fences, parse_gistemp)

SAMPLE = """Land-Ocean: Global Means
Year,Jan,Feb,J-D,D-N
1880,-.18,-.24,-.17,***
1881,-.19,-.14,-.09,-.10
1882,.16,.14,-.11,-.09
"""


def test_pinned_snapshot_covers_1880_to_2020(pinned):
    assert pinned.n == 141
    assert pinned.years[0] == 1880 and pinned.years[-1] == 2020
    assert pinned.column == "J-D"


def test_describe_matches_published_table(pinned):
    stats = describe(pinned)
    assert stats.count == 141
    assert stats.mean == pytest.approx(0.0504, abs=0.002)
    assert stats.std == pytest.approx(0.3579, abs=0.003)
    assert stats.min == pytest.approx(-0.48, abs=0.01)
    assert stats.max == pytest.approx(1.02, abs=0.01)
    assert stats.skewness == pytest.approx(0.9049, abs=0.02)
    assert stats.kurtosis == pytest.approx(0.0430, abs=0.05)
    assert (stats.q25, stats.median, stats.q75) == pytest.approx((-0.20, -0.07, 0.23), abs=1e-9)


def test_parse_selects_column_and_skips_preamble():
    series = parse_gistemp(SAMPLE, column="J-D")
    assert_array_equal(series.years, [1880, 1881, 1882])
    assert_array_equal(series.values, [-0.17, -0.09, -0.11])


def test_parse_drops_trailing_missing_marker():
    series = parse_gistemp(SAMPLE, column="D-N")
    assert_array_equal(series.years, [1881, 1882])


def test_parse_reads_file_objects_and_repeated_headers():
    text = SAMPLE + "Year,Jan,Feb,J-D,D-N\n1883,.0,.0,-.17,-.18\n"
    series = parse_gistemp(io.StringIO(text))
    assert series.n == 4
    assert series.values[-1] == -0.17


def test_parse_gap_in_middle_raises():
    text = SAMPLE.replace("1881,-.19,-.14,-.09", "1881,-.19,-.14,***")
    with pytest.raises(NonConsecutiveYears):
        parse_gistemp(text)


def test_parse_errors():
    with pytest.raises(MissingColumn):
        parse_gistemp(SAMPLE, column="DJF")
    with pytest.raises(MissingColumn):
        parse_gistemp("no header here\n1,2\n")
    with pytest.raises(EmptySeries):
        parse_gistemp("Year,J-D\n1880,***\n")


def test_csv_serialization_reparses_identically(pinned):
    again = parse_gistemp(pinned.to_csv())
    assert_array_equal(again.years, pinned.years)
    assert_array_equal(again.values, pinned.values)


def test_series_is_read_only(pinned):
    with pytest.raises(ValueError):
        pinned.values[0] = 0.0


def test_series_rejects_non_consecutive_years():
    with pytest.raises(NonConsecutiveYears):
        AnnualSeries(years=[2000, 2001, 2003], values=[0.1, 0.2, 0.3])


def test_describe_constant_series_and_short_series(make_series):
    stats = describe(make_series([0.5] * 6))
    assert stats.std == 0.0 and stats.skewness == 0.0 and stats.kurtosis == 0.0
    with pytest.raises(TooShort):
        describe(make_series([0.1, 0.2, 0.3]))


def test_describe_small_example(make_series):
    stats = describe(make_series([1, 2, 3, 4]))
    assert stats.mean == 2.5
    assert stats.std == pytest.approx(1.2909944, abs=1e-6)
    assert stats.skewness == pytest.approx(0.0, abs=1e-12)
    assert (stats.min, stats.median, stats.max) == (1.0, 2.5, 4.0)


def test_describe_ignores_order(pinned, make_series, rng):
    base = describe(pinned)
    for _ in range(5):
        shuffled = describe(make_series(rng.permutation(pinned.values)))
        assert (shuffled.count, shuffled.min, shuffled.q25, shuffled.median, shuffled.q75,
                shuffled.max) == (base.count, base.min, base.q25, base.median, base.q75, base.max)
        for name in ("mean", "std", "skewness", "kurtosis"):
            assert getattr(shuffled, name) == pytest.approx(getattr(base, name), rel=1e-9, abs=1e-12)


def test_iqr_flags_recent_warm_years(pinned):
    report = detect_outliers_iqr(pinned)
    assert report.method == OutlierMethod.IQR
    # 2013, 2014 and 2018 sit inside the upper fence of this snapshot
    assert set(report.flagged_years) <= set(range(2013, 2021))
    assert report.flagged_years == (2015, 2016, 2017, 2019, 2020)
    lower, upper = iqr_fences(pinned.values)
    assert upper == pytest.approx(0.875)
    assert len(report.scores) == pinned.n


def test_iqr_scores_are_signed_distances(make_series):
    report = detect_outliers_iqr(make_series([0, 1, 2, 3, 4, 5, 6, 7, 100, -100]))
    assert report.flagged_years == (1908, 1909)
    assert report.scores[8] > 0 > report.scores[9]
    assert all(s == 0 for s in report.scores[:8])


def test_isolation_forest_ranks_recent_extremes(pinned):
    report = detect_outliers_iforest(pinned, trees=200, seed=7)
    assert report.method == OutlierMethod.ISOLATION_FOREST
    assert len(report.flagged_years) == len(detect_outliers_iqr(pinned).flagged_years)
    assert {2016, 2020} <= set(report.flagged_years)
    assert len(set(report.flagged_years) & set(range(2013, 2021))) >= 3
    assert len(report.scores) == pinned.n


def test_isolation_forest_is_seeded(pinned):
    a = detect_outliers_iforest(pinned, seed=11)
    b = detect_outliers_iforest(pinned, seed=11)
    assert a == b
    assert np.all(np.isfinite(a.scores))


def test_iqr_flags_single_gross_outlier(make_series):
    report = detect_outliers_iqr(make_series([1, 1, 1, 1, 100], start=2000))
    assert report.flagged_years == (2004,)


@pytest.mark.parametrize("shift, scale", [(0.0, 3.0), (2.5, 1.0), (-7.0, 0.25)])
def test_iqr_flags_survive_positive_affine_maps(make_series, shift, scale):
    values = np.concatenate([np.arange(20) % 7 - 3.0, [15.0, -12.0]])
    base = detect_outliers_iqr(make_series(values)).flagged_years
    moved = detect_outliers_iqr(make_series(values * scale + shift)).flagged_years
    assert base == (1920, 1921)
    assert moved == base


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_isolation_forest_scores_planted_spike_highest(make_series, seed):
    values = np.random.default_rng(seed).normal(size=100)
    values[37] = 10.0
    report = detect_outliers_iforest(make_series(values), trees=200, seed=seed)
    assert int(np.argmax(report.scores)) == 37
