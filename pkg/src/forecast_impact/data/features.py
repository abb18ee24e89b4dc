"""Per-hour design matrices, min-max scaling and the chronological train/test split."""

from __future__ import annotations

import logging
from dataclasses import replace
from typing import TYPE_CHECKING

import numpy as np
import pandas as pd

from forecast_impact.data import export
from forecast_impact.data.calendar import label_calendar
from forecast_impact.data.models import DEFAULT_SEASONS, DemandSeries, FeatureMatrix, MinMaxScaler, SeasonTable
from forecast_impact.errors import DataError, EmptySplitError, SeriesTooShortError


if TYPE_CHECKING:
    from collections.abc import Iterable
    from datetime import date


log = logging.getLogger(__name__)

DEFAULT_LAG_DAYS: tuple[int, ...] = (1, 2, 7, 30)
DEFAULT_LAG_WINDOW: int = 28

# Hour is constant within a per-hour matrix, so it is not a feature
CALENDAR_SCALARS = ("month", "day_of_week", "day_of_month", "year", "is_holiday_or_weekend")


def _check_lags(lag_days: Iterable[int], lag_window: int) -> tuple[int, ...]:
    days = tuple(sorted(set(lag_days)))
    if not days or days[0] < 1:
        msg = f"lag_days must be a non-empty set of positive day counts, got {days}"
        raise DataError(msg)
    if lag_window < 1:
        msg = f"lag_window must be at least 1, got {lag_window}"
        raise DataError(msg)
    return days


def feature_names(
    lag_days: Iterable[int] = DEFAULT_LAG_DAYS,
    lag_window: int = DEFAULT_LAG_WINDOW,
    seasons: SeasonTable = DEFAULT_SEASONS,
) -> tuple[str, ...]:
    """Column labels in row order: calendar scalars, season flags, then lag windows oldest first."""
    days = _check_lags(lag_days, lag_window)
    names = [*CALENDAR_SCALARS, *(f"season_{name}" for name in seasons.names)]
    for d in days:
        names.extend(f"lag_{d}d_h-{j}" for j in range(lag_window - 1, -1, -1))
    return tuple(names)


def lag_positions(
    target_positions: np.ndarray,
    lag_days: Iterable[int] = DEFAULT_LAG_DAYS,
    lag_window: int = DEFAULT_LAG_WINDOW,
) -> np.ndarray:
    """
    Series positions feeding each row's lag features.

    The window for lag d ends at the target hour of day D-d inclusive, so its last position is
    ``target - 24 * d``. Positions may be negative for targets too early in the series.
    """
    days = _check_lags(lag_days, lag_window)
    offsets = np.concatenate([24 * d + np.arange(lag_window - 1, -1, -1) for d in days])
    return np.asarray(target_positions)[:, None] - offsets[None, :]


@export
def build_features(  # noqa: PLR0913
    series: DemandSeries,
    calendar: pd.DataFrame | None = None,
    target_hour: int = 0,
    lag_days: Iterable[int] = DEFAULT_LAG_DAYS,
    lag_window: int = DEFAULT_LAG_WINDOW,
    seasons: SeasonTable = DEFAULT_SEASONS,
) -> FeatureMatrix:
    """
    Build the unscaled design matrix for one target hour.

    One row per date whose target hour and every lag hour are present in the series; dates with
    a missing lag are dropped. Targets are raw MWh.
    """
    if not 0 <= target_hour <= 23:  # noqa: PLR2004
        msg = f"target_hour must be within 0..23, got {target_hour}"
        raise DataError(msg)
    days = _check_lags(lag_days, lag_window)
    if calendar is None:
        calendar = label_calendar(series, seasons)
    if len(calendar) != len(series):
        msg = f"calendar has {len(calendar)} rows but the series has {len(series)}"
        raise DataError(msg)

    candidates = np.flatnonzero(calendar["hour"].to_numpy() == target_hour)
    earliest = 24 * days[-1] + lag_window - 1
    targets = candidates[candidates >= earliest]
    if not targets.size:
        msg = (
            f"no date has complete lags for hour {target_hour}: need {earliest + 1} hours of history, "
            f"series has {len(series)}"
        )
        raise SeriesTooShortError(msg)

    selected = calendar.iloc[targets]
    scalars = selected[list(CALENDAR_SCALARS)].to_numpy(dtype=float)
    season_codes = selected["stor_season"].cat.codes.to_numpy()
    one_hot = (season_codes[:, None] == np.arange(len(seasons.names))[None, :]).astype(float)
    lags = series.demand[lag_positions(targets, days, lag_window)]

    log.debug("Built %d rows for hour %02d from %d candidate dates", len(targets), target_hour, len(candidates))
    return FeatureMatrix(
        rows=np.hstack([scalars, one_hot, lags]),
        targets=series.demand[targets],
        timestamps=series.timestamps[targets],
        feature_names=feature_names(days, lag_window, seasons),
        target_hour=target_hour,
    )


@export
def fit_scaler(train: FeatureMatrix) -> MinMaxScaler:
    """Fit a feature scaler on training rows only."""
    return MinMaxScaler.fit(train.rows)


@export
def fit_target_scaler(train: FeatureMatrix) -> MinMaxScaler:
    """Fit the separate target scaler on training targets only."""
    return MinMaxScaler.fit(train.targets)


@export
def apply_scaler(
    scaler: MinMaxScaler,
    matrix: FeatureMatrix,
    target_scaler: MinMaxScaler | None = None,
) -> FeatureMatrix:
    """Return the matrix with scaled rows; targets stay in MWh and are scaled on demand."""
    return replace(
        matrix,
        rows=scaler.transform(matrix.rows),
        scaler=scaler,
        target_scaler=target_scaler if target_scaler is not None else matrix.target_scaler,
    )


@export
def scale_split(train: FeatureMatrix, test: FeatureMatrix) -> tuple[FeatureMatrix, FeatureMatrix]:
    """Fit both scalers on the training side and apply them to both sides."""
    scaler = fit_scaler(train)
    target_scaler = fit_target_scaler(train)
    return apply_scaler(scaler, train, target_scaler), apply_scaler(scaler, test, target_scaler)


@export
def split_train_test(matrix: FeatureMatrix, boundary: date) -> tuple[FeatureMatrix, FeatureMatrix]:
    """Split rows before ``boundary`` into train and the rest into test."""
    mask = np.asarray(matrix.timestamps < pd.Timestamp(boundary))
    train, test = matrix.take(mask), matrix.take(~mask)
    if not len(train) or not len(test):
        msg = f"boundary {boundary} leaves {len(train)} train and {len(test)} test rows"
        raise EmptySplitError(msg)
    return train, test
