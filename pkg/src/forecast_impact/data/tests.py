"""Tests for demand ingest, calendar labelling and feature construction."""

import os.path

from datetime import date, datetime
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from forecast_impact.data import (
    DEFAULT_SEASONS,
    FeatureMatrix,
    MinMaxScaler,
    Season,
    SeasonTable,
    apply_scaler,
    build_features,
    calendar_records,
    fit_scaler,
    ingest_demand_csv,
    label_calendar,
    load_holidays,
    scale_split,
    split_train_test,
    synth_demand,
    write_demand_csv,
)
from forecast_impact.data.features import lag_positions
from forecast_impact.errors import (
    DimensionMismatchError,
    DuplicateTimestampError,
    EmptySplitError,
    GapInSeriesError,
    MissingColumnError,
    NegativeDemandError,
    OverlappingSeasonsError,
    SeriesTooShortError,
    UncoveredDateError,
    UnparsableTimestampError,
)


BASE: Path = Path(os.path.realpath(__file__)).parent / Path("test_data")


def flat_series(n_days: int, start: date = date(2016, 1, 1), **kwargs: float):
    params = {"base": 30000.0, "daily_amp": 0.0, "weekly_amp": 0.0, "seasonal_amp": 0.0, "noise_sd": 0.0}
    params.update(kwargs)
    return synth_demand(start=start, n_days=n_days, drift_per_year=0.0, seed=1, **params)


##########
# Ingest #
##########
def test_ingest_sorts_rows():
    series = ingest_demand_csv(BASE / "demand_unsorted.csv")
    assert len(series) == 3
    assert series.demand.tolist() == [30000.0, 29500.25, 31000.5]
    assert series.start == pd.Timestamp("2016-01-01T00:00:00")


def test_ingest_reports_first_missing_hour():
    with pytest.raises(GapInSeriesError) as excinfo:
        ingest_demand_csv(BASE / "demand_gap.csv")
    assert excinfo.value.missing == datetime(2016, 1, 1, 1, 0)


def test_ingest_rejects_negative_demand():
    with pytest.raises(NegativeDemandError):
        ingest_demand_csv(BASE / "demand_negative.csv")


def test_ingest_rejects_duplicates():
    with pytest.raises(DuplicateTimestampError):
        ingest_demand_csv(BASE / "demand_duplicate.csv")


def test_ingest_rejects_bad_timestamp():
    with pytest.raises(UnparsableTimestampError, match="yesterday"):
        ingest_demand_csv(BASE / "demand_bad_timestamp.csv")


def test_ingest_column_map():
    with pytest.raises(MissingColumnError):
        ingest_demand_csv(BASE / "demand_other_columns.csv")
    series = ingest_demand_csv(
        BASE / "demand_other_columns.csv",
        timestamp_column="time",
        demand_column="load_mw",
        timestamp_format="%Y-%m-%d %H:%M",
    )
    assert series.demand.tolist() == [30000.0, 29000.0]


def test_write_then_ingest(tmp_path: Path):
    series = synth_demand(date(2016, 1, 1), 2, 30000, 6000, 3000, 5000, 600, 0, seed=3)
    write_demand_csv(series, tmp_path / "out.csv")
    again = ingest_demand_csv(tmp_path / "out.csv")
    assert again.timestamps.equals(series.timestamps)
    np.testing.assert_allclose(again.demand, series.demand, rtol=1e-12)


def test_load_holidays():
    assert load_holidays(BASE / "holidays.txt") == {date(2016, 1, 1), date(2016, 3, 25), date(2016, 3, 28)}


#############
# Synthesis #
#############
def test_synth_without_amplitudes_is_flat():
    series = flat_series(10)
    assert np.all(series.demand == 30000.0)


def test_synth_is_deterministic():
    first = synth_demand(date(2016, 1, 1), 30, 30000, 6000, 3000, 5000, 600, 100, seed=11)
    second = synth_demand(date(2016, 1, 1), 30, 30000, 6000, 3000, 5000, 600, 100, seed=11)
    assert np.array_equal(first.demand, second.demand)


def test_synth_noise_level():
    noisy = synth_demand(date(2016, 1, 1), 365, 30000, 6000, 3000, 5000, 100, 0, seed=5)
    clean = synth_demand(date(2016, 1, 1), 365, 30000, 6000, 3000, 5000, 0, 0, seed=5)
    assert 85 <= np.std(noisy.demand - clean.demand, ddof=1) <= 115


############
# Calendar #
############
def test_weekend_and_holiday_flags():
    series = synth_demand(date(2016, 1, 28), 10, 30000, 0, 0, 0, 0, 0, seed=1, holidays={date(2016, 2, 3)})
    frame = label_calendar(series)
    saturday = frame.loc[pd.Timestamp("2016-01-30T10:00")]
    assert saturday["day_of_week"] == 5
    assert saturday["is_holiday_or_weekend"]
    wednesday = frame.loc[pd.Timestamp("2016-02-03T10:00")]
    assert wednesday["day_of_week"] == 2
    assert wednesday["is_holiday_or_weekend"]
    assert not frame.loc[pd.Timestamp("2016-02-04T10:00")]["is_holiday_or_weekend"]


def test_season_boundary_belongs_to_starting_season():
    frame = label_calendar(flat_series(10, start=date(2016, 1, 28)))
    assert frame.loc[pd.Timestamp("2016-01-31T23:00")]["stor_season"] == "winter_early"
    assert frame.loc[pd.Timestamp("2016-02-01T00:00")]["stor_season"] == "winter_late"
    assert list(frame["stor_season"].cat.categories) == list(DEFAULT_SEASONS.names)


def test_winter_peak_wraps_over_new_year():
    frame = label_calendar(flat_series(3, start=date(2016, 12, 30)))
    assert set(frame["stor_season"].iloc[:48]) == {"winter_peak"}
    assert set(frame["stor_season"].iloc[48:]) == {"winter_early"}


def test_bad_season_tables():
    seasons = list(DEFAULT_SEASONS.seasons)
    overlapping = SeasonTable(seasons=(*seasons[:6], Season(name="winter_peak", start="11-01", end="01-01")))
    with pytest.raises(OverlappingSeasonsError):
        label_calendar(flat_series(2), overlapping)
    uncovered = SeasonTable(seasons=(*seasons[:6], Season(name="winter_peak", start="12-01", end="01-01")))
    with pytest.raises(UncoveredDateError):
        label_calendar(flat_series(2), uncovered)


def test_calendar_records():
    records = calendar_records(label_calendar(flat_series(1)))
    assert len(records) == 24
    assert records[5].hour == 5
    assert records[5].stor_season == "winter_early"
    assert records[5].year == 2016


############
# Features #
############
def test_default_feature_width():
    matrix = build_features(flat_series(40), target_hour=6)
    lag_columns = [name for name in matrix.feature_names if name.startswith("lag_")]
    assert len(lag_columns) == 112
    assert matrix.n_features == 12 + 112


def test_single_lag_is_previous_day():
    series = synth_demand(date(2016, 1, 1), 5, 30000, 6000, 3000, 5000, 600, 0, seed=2)
    matrix = build_features(series, target_hour=12, lag_days={1}, lag_window=1)
    assert matrix.feature_names[-1] == "lag_1d_h-0"
    for row, stamp in zip(matrix.rows, matrix.timestamps):
        previous = series.demand[series.timestamps.get_loc(stamp - pd.Timedelta(days=1))]
        assert row[-1] == previous


def test_row_count_by_enumeration():
    series = flat_series(100)
    for hour in (0, 12, 23):
        expected = sum(1 for day in range(100) if 24 * day + hour - 24 * 30 - 27 >= 0)
        assert len(build_features(series, target_hour=hour)) == expected


def test_thirty_day_window_reaches_back_one_more_day():
    # the 28-hour window of the 30-day lag starts on day D-31, or D-32 before 03:00
    series = flat_series(100)
    assert [len(build_features(series, target_hour=hour)) for hour in (0, 2, 3, 12, 23)] == [68, 68, 69, 69, 69]


def test_features_are_deterministic():
    series = synth_demand(date(2016, 1, 1), 45, 30000, 6000, 3000, 5000, 600, 0, seed=4)
    first = build_features(series, target_hour=17)
    second = build_features(series, target_hour=17)
    assert np.array_equal(first.rows, second.rows)
    assert np.array_equal(first.targets, second.targets)


def test_no_lag_from_the_target_day():
    series = synth_demand(date(2016, 1, 1), 45, 30000, 6000, 3000, 5000, 600, 0, seed=4)
    matrix = build_features(series, target_hour=23)
    positions = series.timestamps.get_indexer(matrix.timestamps)
    lags = lag_positions(positions)
    assert lags.min() >= 0
    lag_days = series.timestamps[lags.ravel()].normalize().to_numpy().reshape(lags.shape)
    target_days = matrix.timestamps.normalize().to_numpy()[:, None]
    assert np.all(lag_days < target_days)
    np.testing.assert_array_equal(matrix.targets, series.demand[positions])


def test_series_too_short():
    with pytest.raises(SeriesTooShortError):
        build_features(flat_series(20), target_hour=0)


###########
# Scaling #
###########
def test_scaler_endpoints():
    scaler = MinMaxScaler.fit(np.array([[0.0, 7.0], [5.0, 7.0], [10.0, 7.0]]))
    scaled = scaler.transform(np.array([[0.0, 7.0], [5.0, 7.0], [10.0, 7.0]]))
    np.testing.assert_array_equal(scaled, [[-1.0, 0.0], [0.0, 0.0], [1.0, 0.0]])
    assert scaler.transform(np.array([[12.0, 7.0]]))[0, 0] == pytest.approx(1.4)


def test_scaler_rejects_other_width():
    scaler = MinMaxScaler.fit(np.zeros((3, 2)))
    with pytest.raises(DimensionMismatchError):
        scaler.transform(np.zeros((3, 3)))


def test_scaled_training_columns_span_unit_interval():
    series = synth_demand(date(2016, 1, 1), 60, 30000, 6000, 3000, 5000, 600, 0, seed=9)
    train, test = split_train_test(build_features(series, target_hour=8), date(2016, 2, 20))
    scaled_train, scaled_test = scale_split(train, test)
    span = train.rows.max(axis=0) > train.rows.min(axis=0)
    assert np.allclose(scaled_train.rows[:, span].min(axis=0), -1.0)
    assert np.allclose(scaled_train.rows[:, span].max(axis=0), 1.0)
    assert np.all(scaled_train.rows[:, ~span] == 0.0)
    restored = scaled_train.scaler.inverse_transform(scaled_train.rows)
    np.testing.assert_allclose(restored[:, span], train.rows[:, span], rtol=1e-9)
    np.testing.assert_array_equal(scaled_test.targets, test.targets)
    np.testing.assert_allclose(scaled_test.unscale_targets(scaled_test.scaled_targets()), test.targets, rtol=1e-9)


def test_apply_scaler_width_mismatch():
    series = flat_series(40)
    wide = build_features(series, target_hour=3)
    narrow = build_features(series, target_hour=3, lag_days={1}, lag_window=2)
    with pytest.raises(DimensionMismatchError):
        apply_scaler(fit_scaler(wide), narrow)


#########
# Split #
#########
def daily_matrix(n: int) -> FeatureMatrix:
    return FeatureMatrix(
        rows=np.arange(n, dtype=float)[:, None],
        targets=np.arange(n, dtype=float),
        timestamps=pd.date_range("2016-01-01T12:00", periods=n, freq="D"),
        feature_names=("x",),
        target_hour=12,
    )


def test_split_counts():
    matrix = daily_matrix(70)
    train, test = split_train_test(matrix, matrix.timestamps[50].date())
    assert (len(train), len(test)) == (50, 20)
    assert train.timestamps.max() < test.timestamps.min()


def test_split_must_leave_both_sides():
    matrix = daily_matrix(70)
    with pytest.raises(EmptySplitError):
        split_train_test(matrix, date(2015, 1, 1))
    with pytest.raises(EmptySplitError):
        split_train_test(matrix, date(2017, 1, 1))
