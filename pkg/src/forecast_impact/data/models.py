"""Data records for demand series, calendar labels and per-hour design matrices."""

from __future__ import annotations

from dataclasses import dataclass, replace
from datetime import date
from typing import Any

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, field_validator

from forecast_impact.data import export
from forecast_impact.errors import (
    DataError,
    DimensionMismatchError,
    DuplicateTimestampError,
    GapInSeriesError,
    NegativeDemandError,
    NonFiniteDemandError,
    OverlappingSeasonsError,
    UncoveredDateError,
)


ONE_HOUR = pd.Timedelta(hours=1)


def readonly(values: Any, dtype: type = float) -> np.ndarray:  # noqa: ANN401
    """Copy values into a read-only numpy array."""
    array = np.array(values, dtype=dtype)
    array.setflags(write=False)
    return array


def check_hourly_steps(timestamps: pd.DatetimeIndex) -> None:
    """Raise if the timestamps do not advance in exact one-hour steps."""
    if len(timestamps) < 2:  # noqa: PLR2004
        return
    steps = timestamps[1:] - timestamps[:-1]
    duplicated = np.flatnonzero(steps == pd.Timedelta(0))
    if duplicated.size:
        msg = f"duplicate observation at {timestamps[duplicated[0]].isoformat()}"
        raise DuplicateTimestampError(msg)
    backwards = np.flatnonzero(steps < pd.Timedelta(0))
    if backwards.size:
        msg = f"timestamps are not increasing at {timestamps[backwards[0] + 1].isoformat()}"
        raise DataError(msg)
    irregular = np.flatnonzero(steps != ONE_HOUR)
    if irregular.size:
        raise GapInSeriesError((timestamps[irregular[0]] + ONE_HOUR).to_pydatetime())


@export
@dataclass(frozen=True, eq=False)
class DemandSeries:
    """Hourly national demand observations (MWh) with the public holidays that apply to them."""

    timestamps: pd.DatetimeIndex
    demand: np.ndarray
    holidays: frozenset[date] = frozenset()

    def __post_init__(self) -> None:
        """Freeze the arrays and enforce the hourly-step and non-negativity invariants."""
        timestamps = pd.DatetimeIndex(self.timestamps)
        demand = readonly(self.demand)
        if demand.ndim != 1 or len(demand) != len(timestamps):
            msg = f"{len(timestamps)} timestamps but demand has shape {demand.shape}"
            raise DataError(msg)
        if not len(demand):
            msg = "a demand series needs at least one observation"
            raise DataError(msg)
        bad = np.flatnonzero(~np.isfinite(demand))
        if bad.size:
            msg = f"non-finite demand at {timestamps[bad[0]].isoformat()}"
            raise NonFiniteDemandError(msg)
        negative = np.flatnonzero(demand < 0)
        if negative.size:
            msg = f"negative demand {demand[negative[0]]} at {timestamps[negative[0]].isoformat()}"
            raise NegativeDemandError(msg)
        check_hourly_steps(timestamps)
        object.__setattr__(self, "timestamps", timestamps)
        object.__setattr__(self, "demand", demand)
        object.__setattr__(self, "holidays", frozenset(self.holidays))

    def __len__(self) -> int:
        """Number of hourly observations."""
        return len(self.demand)

    @property
    def start(self) -> pd.Timestamp:
        """First observed hour."""
        return self.timestamps[0]

    @property
    def end(self) -> pd.Timestamp:
        """Last observed hour."""
        return self.timestamps[-1]

    def to_frame(self) -> pd.DataFrame:
        """Return the series as a two-column frame."""
        return pd.DataFrame({"timestamp": self.timestamps, "demand": self.demand})


def _month_day(value: str) -> tuple[int, int]:
    month, day = (int(part) for part in value.split("-"))
    date(2000, month, day)  # 2000 is a leap year, so 02-29 is accepted
    return month, day


@export
class Season(BaseModel):
    """A half-open calendar interval [start, end) given as MM-DD strings; wraps over the new year."""

    model_config = ConfigDict(frozen=True)

    name: str
    start: str
    end: str

    @field_validator("start", "end")
    @classmethod
    def validate_month_day(cls, v: str) -> str:
        try:
            _month_day(v)
        except ValueError as exc:
            msg = f"{v!r} is not a valid MM-DD date"
            raise ValueError(msg) from exc
        return v

    def contains(self, month: int, day: int) -> bool:
        """Return True if the calendar day falls inside this season."""
        key = (month, day)
        start, end = _month_day(self.start), _month_day(self.end)
        if start < end:
            return start <= key < end
        if start > end:
            return key >= start or key < end
        return True


@export
class SeasonTable(BaseModel):
    """Seven seasons that partition the calendar year."""

    model_config = ConfigDict(frozen=True)

    seasons: tuple[Season, ...] = Field(min_length=7, max_length=7)

    @property
    def names(self) -> tuple[str, ...]:
        """Season names in table order."""
        return tuple(season.name for season in self.seasons)

    def day_lookup(self) -> np.ndarray:
        """Map month * 100 + day to a season index, checking that the table is a partition."""
        lookup = np.full(1232, -1, dtype=np.int64)
        for day in pd.date_range("2000-01-01", "2000-12-31", freq="D"):
            matches = [i for i, season in enumerate(self.seasons) if season.contains(day.month, day.day)]
            if len(matches) > 1:
                names = ", ".join(self.seasons[i].name for i in matches)
                msg = f"{day.strftime('%m-%d')} is claimed by several seasons: {names}"
                raise OverlappingSeasonsError(msg)
            if not matches:
                msg = f"{day.strftime('%m-%d')} is not covered by any season"
                raise UncoveredDateError(msg)
            lookup[day.month * 100 + day.day] = matches[0]
        return lookup


DEFAULT_SEASONS = SeasonTable(
    seasons=(
        Season(name="winter_early", start="01-01", end="02-01"),
        Season(name="winter_late", start="02-01", end="03-15"),
        Season(name="spring", start="03-15", end="05-15"),
        Season(name="summer", start="05-15", end="08-15"),
        Season(name="autumn_early", start="08-15", end="10-01"),
        Season(name="autumn_late", start="10-01", end="11-15"),
        Season(name="winter_peak", start="11-15", end="01-01"),
    ),
)


@export
class CalendarFeatures(BaseModel):
    """Calendar predictors for one hourly record."""

    model_config = ConfigDict(frozen=True)

    hour: int = Field(ge=0, le=23)
    month: int = Field(ge=1, le=12)
    day_of_week: int = Field(ge=0, le=6)
    day_of_month: int = Field(ge=1, le=31)
    year: int
    is_holiday_or_weekend: bool
    stor_season: str


@export
class SynthParams(BaseModel):
    """Parameters of the synthetic hourly demand generator."""

    model_config = ConfigDict(frozen=True)

    start: date = date(2016, 1, 1)
    n_days: int = Field(default=365, ge=1)
    base: float = 30000.0
    daily_amp: float = Field(default=6000.0, ge=0)
    weekly_amp: float = Field(default=3000.0, ge=0)
    seasonal_amp: float = Field(default=5000.0, ge=0)
    noise_sd: float = Field(default=600.0, ge=0)
    drift_per_year: float = 0.0
    seed: int = 0


# Two training years and one test year with strong upward drift
DRIFT_SCENARIO = SynthParams(
    start=date(2016, 1, 1),
    n_days=1096,
    base=30000.0,
    daily_amp=6000.0,
    weekly_amp=3000.0,
    seasonal_amp=5000.0,
    noise_sd=600.0,
    drift_per_year=4000.0,
    seed=7,
)
DRIFT_BOUNDARY = date(2018, 1, 1)


@export
@dataclass(frozen=True, eq=False)
class MinMaxScaler:
    """Per-feature linear map of the training range onto [-1, 1]; constant features map to 0."""

    data_min: np.ndarray
    data_max: np.ndarray

    def __post_init__(self) -> None:
        """Freeze the fitted range."""
        object.__setattr__(self, "data_min", readonly(self.data_min))
        object.__setattr__(self, "data_max", readonly(self.data_max))

    @classmethod
    def fit(cls, X: np.ndarray) -> MinMaxScaler:
        """Record per-column minima and maxima."""
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if not len(X):
            msg = "cannot fit a scaler on zero rows"
            raise DataError(msg)
        return cls(data_min=X.min(axis=0), data_max=X.max(axis=0))

    @property
    def n_features(self) -> int:
        """Number of scaled columns."""
        return len(self.data_min)

    def _check(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        squeeze = X.ndim == 1 and self.n_features == 1
        if squeeze:
            X = X[:, None]
        if X.ndim != 2 or X.shape[1] != self.n_features:  # noqa: PLR2004
            raise DimensionMismatchError(self.n_features, X.shape[-1] if X.ndim else 0)
        return X

    def transform(self, X: np.ndarray) -> np.ndarray:
        """Scale X; values outside the training range are extrapolated, not clipped."""
        squeeze = np.ndim(X) == 1
        Xc = self._check(X)
        span = self.data_max - self.data_min
        out = np.zeros_like(Xc)
        np.divide(2.0 * (Xc - self.data_min), span, out=out, where=span > 0)
        out = np.where(span > 0, out - 1.0, 0.0)
        return out[:, 0] if squeeze else out

    def inverse_transform(self, Z: np.ndarray) -> np.ndarray:
        """Undo transform; constant features come back as their training value."""
        squeeze = np.ndim(Z) == 1
        Zc = self._check(Z)
        span = self.data_max - self.data_min
        out = np.where(span > 0, (Zc + 1.0) / 2.0 * span + self.data_min, self.data_min)
        return out[:, 0] if squeeze else out

    def to_dict(self) -> dict[str, list[float]]:
        """Serialise the fitted range."""
        return {"data_min": self.data_min.tolist(), "data_max": self.data_max.tolist()}

    @classmethod
    def from_dict(cls, data: dict[str, list[float]]) -> MinMaxScaler:
        """Rebuild a scaler from to_dict output."""
        return cls(data_min=np.asarray(data["data_min"]), data_max=np.asarray(data["data_max"]))


@export
@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    """Design matrix for one target hour: one row per date, targets in raw MWh."""

    rows: np.ndarray
    targets: np.ndarray
    timestamps: pd.DatetimeIndex
    feature_names: tuple[str, ...]
    target_hour: int
    scaler: MinMaxScaler | None = None
    target_scaler: MinMaxScaler | None = None

    def __post_init__(self) -> None:
        """Freeze arrays and check alignment."""
        rows = readonly(self.rows)
        targets = readonly(self.targets)
        timestamps = pd.DatetimeIndex(self.timestamps)
        if rows.ndim != 2:  # noqa: PLR2004
            msg = f"rows must be two-dimensional, got shape {rows.shape}"
            raise DataError(msg)
        if not (len(rows) == len(targets) == len(timestamps)):
            msg = f"{len(rows)} rows, {len(targets)} targets and {len(timestamps)} timestamps do not align"
            raise DataError(msg)
        if rows.shape[1] != len(self.feature_names):
            raise DimensionMismatchError(len(self.feature_names), rows.shape[1])
        if timestamps.has_duplicates:
            msg = "every row must target a distinct (date, hour)"
            raise DataError(msg)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "targets", targets)
        object.__setattr__(self, "timestamps", timestamps)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))

    def __len__(self) -> int:
        """Number of rows."""
        return len(self.targets)

    @property
    def n_features(self) -> int:
        """Row width."""
        return self.rows.shape[1]

    def take(self, selector: np.ndarray | slice) -> FeatureMatrix:
        """Return the rows picked by a boolean mask, index array or slice."""
        return replace(
            self,
            rows=self.rows[selector],
            targets=self.targets[selector],
            timestamps=self.timestamps[selector],
        )

    def scaled_targets(self) -> np.ndarray:
        """Targets mapped through the target scaler (raw targets if there is none)."""
        if self.target_scaler is None:
            return self.targets.copy()
        return self.target_scaler.transform(self.targets)

    def unscale_targets(self, values: np.ndarray) -> np.ndarray:
        """Map scaled predictions back to MWh."""
        values = np.asarray(values, dtype=float)
        if self.target_scaler is None:
            return values.copy()
        return self.target_scaler.inverse_transform(values)

