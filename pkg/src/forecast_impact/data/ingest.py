"""Read, write and synthesise hourly demand series."""

from __future__ import annotations

import logging
from datetime import date
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np
import pandas as pd

from forecast_impact.data import export
from forecast_impact.data.models import DemandSeries, check_hourly_steps
from forecast_impact.errors import (
    DataError,
    MissingColumnError,
    NegativeDemandError,
    NonFiniteDemandError,
    UnparsableTimestampError,
)


if TYPE_CHECKING:
    from collections.abc import Iterable


log = logging.getLogger(__name__)

HOURS_PER_YEAR = 8760.0
TIMESTAMP_FORMAT = "%Y-%m-%dT%H:%M:%S"


@export
def load_holidays(path: Path) -> frozenset[date]:
    """Read a holiday list with one ISO-8601 date per line; blank lines and # comments are skipped."""
    holidays: set[date] = set()
    with Path(path).open() as f:
        for number, line in enumerate(f, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            try:
                holidays.add(date.fromisoformat(text))
            except ValueError as exc:
                msg = f"{path}:{number}: {text!r} is not an ISO-8601 date"
                raise DataError(msg) from exc
    return frozenset(holidays)


@export
def ingest_demand_csv(
    path: Path,
    timestamp_column: str = "timestamp",
    demand_column: str = "demand",
    timestamp_format: str | None = None,
    holidays: Iterable[date] = (),
) -> DemandSeries:
    """
    Read a comma-separated file with a header row into a validated DemandSeries.

    Rows may appear in any order; they are sorted by timestamp before the one-hour step is checked.
    Timestamps carrying a UTC offset are converted to naive UTC.
    """
    frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    missing = [column for column in (timestamp_column, demand_column) if column not in frame.columns]
    if missing:
        msg = f"{path}: missing column(s) {', '.join(missing)}; found {', '.join(frame.columns)}"
        raise MissingColumnError(msg)

    raw_stamps = frame[timestamp_column].str.strip()
    stamps = pd.to_datetime(raw_stamps, format=timestamp_format or "ISO8601", errors="coerce", utc=True)
    bad = np.flatnonzero(stamps.isna().to_numpy())
    if bad.size:
        msg = f"{path}: row {bad[0] + 2}: cannot parse timestamp {raw_stamps.iloc[bad[0]]!r}"
        raise UnparsableTimestampError(msg)
    stamps = stamps.dt.tz_localize(None)

    raw_demand = frame[demand_column].str.strip().str.replace("\u2212", "-", regex=False)
    demand = pd.to_numeric(raw_demand, errors="coerce").to_numpy(dtype=float)
    bad = np.flatnonzero(~np.isfinite(demand))
    if bad.size:
        msg = f"{path}: row {bad[0] + 2}: demand {raw_demand.iloc[bad[0]]!r} is not a finite number"
        raise NonFiniteDemandError(msg)
    negative = np.flatnonzero(demand < 0)
    if negative.size:
        msg = f"{path}: row {negative[0] + 2}: negative demand {demand[negative[0]]}"
        raise NegativeDemandError(msg)

    order = np.argsort(stamps.to_numpy(), kind="stable")
    timestamps = pd.DatetimeIndex(stamps.to_numpy()[order])
    check_hourly_steps(timestamps)
    series = DemandSeries(timestamps=timestamps, demand=demand[order], holidays=frozenset(holidays))
    log.debug("Read %d hourly observations from %s", len(series), path)
    return series


@export
def write_demand_csv(series: DemandSeries, path: Path) -> None:
    """Write the canonical two-column (timestamp, demand) file."""
    series.to_frame().to_csv(path, index=False, date_format=TIMESTAMP_FORMAT, lineterminator="\n")


@export
def synth_demand(  # noqa: PLR0913
    start: date,
    n_days: int,
    base: float,
    daily_amp: float,
    weekly_amp: float,
    seasonal_amp: float,
    noise_sd: float,
    drift_per_year: float,
    seed: int,
    holidays: Iterable[date] = (),
) -> DemandSeries:
    """
    Generate a desk-scale hourly demand series.

    demand(t) = base + daily sinusoid (trough at midnight) - weekly_amp on weekends and holidays
    + annual sinusoid (peak mid-January) + linear drift + Gaussian noise, clipped at zero.
    The noise stream is drawn even when noise_sd is zero, so runs that differ only in noise_sd
    share the same seeded draws.
    """
    amplitudes = {"daily_amp": daily_amp, "weekly_amp": weekly_amp, "seasonal_amp": seasonal_amp, "noise_sd": noise_sd}
    negative = [name for name, value in amplitudes.items() if value < 0]
    if negative:
        msg = f"amplitudes must be non-negative: {', '.join(negative)}"
        raise DataError(msg)
    if n_days < 1:
        msg = f"n_days must be at least 1, got {n_days}"
        raise DataError(msg)

    holidays = frozenset(holidays)
    n_hours = 24 * n_days
    timestamps = pd.date_range(pd.Timestamp(start), periods=n_hours, freq="h")
    hours = timestamps.hour.to_numpy()
    day_of_year = timestamps.dayofyear.to_numpy()
    off_days = (timestamps.dayofweek.to_numpy() >= 5) | timestamps.normalize().isin(  # noqa: PLR2004
        pd.DatetimeIndex(sorted(holidays)),
    )

    daily = -daily_amp * np.cos(2.0 * np.pi * hours / 24.0)
    weekly = np.where(off_days, -weekly_amp, 0.0)
    seasonal = seasonal_amp * np.cos(2.0 * np.pi * (day_of_year - 15) / 365.25)
    drift = drift_per_year * np.arange(n_hours) / HOURS_PER_YEAR
    noise = noise_sd * np.random.default_rng(seed).standard_normal(n_hours)

    demand = np.clip(base + daily + weekly + seasonal + drift + noise, 0.0, None)
    return DemandSeries(timestamps=timestamps, demand=demand, holidays=holidays)
