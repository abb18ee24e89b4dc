"""Calendar labels: weekend/holiday flags and the seven-season partition."""

from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np
import pandas as pd

from forecast_impact.data import export
from forecast_impact.data.models import DEFAULT_SEASONS, CalendarFeatures, DemandSeries, SeasonTable


if TYPE_CHECKING:
    from collections.abc import Iterable


CALENDAR_COLUMNS = (
    "hour",
    "month",
    "day_of_week",
    "day_of_month",
    "year",
    "is_holiday_or_weekend",
    "stor_season",
)


@export
def label_calendar(series: DemandSeries, seasons: SeasonTable = DEFAULT_SEASONS) -> pd.DataFrame:
    """
    Label every record of the series with its calendar features.

    Returns a frame indexed like the series with the CALENDAR_COLUMNS; ``stor_season`` is a
    categorical whose categories follow the season table order. Raises OverlappingSeasonsError or
    UncoveredDateError if the season table is not a partition of the year.
    """
    lookup = seasons.day_lookup()
    ts = series.timestamps
    day_of_week = ts.dayofweek.to_numpy()
    holidays = pd.DatetimeIndex(sorted(series.holidays))
    off_day = (day_of_week >= 5) | ts.normalize().isin(holidays)  # noqa: PLR2004
    codes = lookup[ts.month.to_numpy() * 100 + ts.day.to_numpy()]
    return pd.DataFrame(
        {
            "hour": ts.hour.to_numpy(),
            "month": ts.month.to_numpy(),
            "day_of_week": day_of_week,
            "day_of_month": ts.day.to_numpy(),
            "year": ts.year.to_numpy(),
            "is_holiday_or_weekend": np.asarray(off_day, dtype=bool),
            "stor_season": pd.Categorical.from_codes(codes, categories=list(seasons.names)),
        },
        index=ts,
    )


@export
def calendar_records(frame: pd.DataFrame) -> list[CalendarFeatures]:
    """Convert a label_calendar frame into one CalendarFeatures record per row."""
    records: Iterable[dict] = frame[list(CALENDAR_COLUMNS)].astype({"stor_season": str}).to_dict("records")
    return [CalendarFeatures(**record) for record in records]
