"""One model per target hour, trained before a date boundary and tested after it."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from datetime import date
from typing import TYPE_CHECKING, Any

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from forecast_impact.data import (
    DEFAULT_LAG_DAYS,
    DEFAULT_LAG_WINDOW,
    DEFAULT_SEASONS,
    build_features,
    label_calendar,
    scale_split,
    split_train_test,
)
from forecast_impact.errors import ConfigError
from forecast_impact.evaluation import export
from forecast_impact.evaluation.metrics import MetricReport, compute_metrics, persistence_baseline
from forecast_impact.evaluation.progressive import progressive_validation
from forecast_impact.evaluation.utils import fit_matrix, predict_matrix
from forecast_impact.learners import OnlineRegressor, make_regressor


if TYPE_CHECKING:
    from collections.abc import Iterable

    from forecast_impact.data import DemandSeries, FeatureMatrix, SeasonTable
    from forecast_impact.learners import Regressor


log = logging.getLogger(__name__)


@dataclass(frozen=True)
class HourResult:
    """What one target hour contributes to a run."""

    hour: int
    model: Regressor
    train: FeatureMatrix
    test: FeatureMatrix
    predictions: np.ndarray
    fit_time: float
    score_time: float
    errors: dict[int, str]


@export
@dataclass(frozen=True)
class HourlyRun:
    """
    Per-hour models and their pooled out-of-sample results.

    ``predictions`` and ``actuals`` are indexed by test timestamp; ``residuals`` (actual minus
    predicted, MWh) leaves out steps where an online learner gave no prediction.
    """

    kind: str
    params: dict[str, Any]
    hours: tuple[HourResult, ...]
    predictions: pd.Series
    actuals: pd.Series
    residuals: pd.Series
    report: MetricReport

    @property
    def models(self) -> dict[int, Regressor]:
        """Fitted model by target hour."""
        return {result.hour: result.model for result in self.hours}

    @property
    def missing(self) -> int:
        """Test steps without a prediction."""
        return int(self.predictions.isna().sum())


def _run_hour(  # noqa: PLR0913
    series: DemandSeries,
    calendar: pd.DataFrame,
    hour: int,
    kind: str,
    params: dict[str, Any],
    boundary: date,
    lag_days: Iterable[int],
    lag_window: int,
    seasons: SeasonTable,
) -> HourResult:
    matrix = build_features(series, calendar, hour, lag_days, lag_window, seasons)
    train, test = scale_split(*split_train_test(matrix, boundary))
    model = make_regressor(kind, **params)

    if isinstance(model, OnlineRegressor):
        result = progressive_validation(model, train, test)
        log.debug("Hour %02d: %d test steps, %d missing", hour, len(test), result.missing)
        return HourResult(
            hour, model, train, test, result.predictions, result.fit_time, result.score_time, result.errors
        )

    started = time.perf_counter()
    fit_matrix(model, train)
    fit_time = time.perf_counter() - started
    started = time.perf_counter()
    predictions = predict_matrix(model, test)
    score_time = time.perf_counter() - started
    log.debug("Hour %02d: fitted %s on %d rows in %.3fs", hour, kind, len(train), fit_time)
    return HourResult(hour, model, train, test, predictions, fit_time, score_time, {})


@export
def per_hour_orchestrate(  # noqa: PLR0913
    series: DemandSeries,
    kind: str,
    params: dict[str, Any] | None = None,
    boundary: date = date(2018, 1, 1),
    hours: Iterable[int] = range(24),
    lag_days: Iterable[int] = DEFAULT_LAG_DAYS,
    lag_window: int = DEFAULT_LAG_WINDOW,
    seasons: SeasonTable = DEFAULT_SEASONS,
    jobs: int = 1,
) -> HourlyRun:
    """
    Fit one ``kind`` model per target hour and pool the test residuals in timestamp order.

    Offline kinds are fitted on the training rows and predict the test rows; online kinds are
    pretrained on the training rows and progressively validated over the test rows. Hours are
    independent, so ``jobs`` changes wall time only.
    """
    params = dict(params or {})
    hours = tuple(hours)
    if not hours or len(set(hours)) != len(hours):
        msg = f"hours must be distinct and non-empty, got {hours}"
        raise ConfigError(msg)
    lag_days = tuple(lag_days)
    calendar = label_calendar(series, seasons)

    log.info("Fitting %s for %d hour(s), boundary %s", kind, len(hours), boundary)
    results: list[HourResult] = Parallel(n_jobs=jobs)(
        delayed(_run_hour)(series, calendar, hour, kind, params, boundary, lag_days, lag_window, seasons)
        for hour in hours
    )

    timestamps = pd.DatetimeIndex(np.concatenate([result.test.timestamps.to_numpy() for result in results]))
    order = np.argsort(timestamps.to_numpy(), kind="stable")
    timestamps = timestamps[order]
    predictions = pd.Series(np.concatenate([result.predictions for result in results])[order], index=timestamps)
    actuals = pd.Series(np.concatenate([result.test.targets for result in results])[order], index=timestamps)
    present = predictions.notna()
    residuals = (actuals - predictions)[present]

    report = compute_metrics(
        actuals[present].to_numpy(),
        predictions[present].to_numpy(),
        naive_baseline=persistence_baseline(series, timestamps[present.to_numpy()]),
        fit_time=sum(result.fit_time for result in results),
        score_time=sum(result.score_time for result in results),
    )
    log.info("%s: MAE %.1f MWh over %d test hours", kind, report.mae, report.n)
    return HourlyRun(
        kind=kind,
        params=params,
        hours=tuple(results),
        predictions=predictions,
        actuals=actuals,
        residuals=residuals,
        report=report,
    )
