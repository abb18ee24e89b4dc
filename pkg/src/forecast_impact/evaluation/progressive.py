"""Predict-then-learn evaluation of incremental learners over a time-ordered stream."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
import pandas as pd

from forecast_impact.errors import DataError, ForecastImpactError
from forecast_impact.evaluation import export
from forecast_impact.evaluation.metrics import MetricReport, compute_metrics
from forecast_impact.evaluation.utils import to_mwh, training_targets


if TYPE_CHECKING:
    from forecast_impact.data import FeatureMatrix
    from forecast_impact.learners import OnlineRegressor


log = logging.getLogger(__name__)


@export
@dataclass(frozen=True)
class ProgressiveResult:
    """
    Outcome of one progressive-validation pass.

    ``predictions`` and ``residuals`` are in MWh and NaN where the learner raised while
    predicting or updating; ``errors`` maps those step indices to the message.
    """

    timestamps: pd.DatetimeIndex
    actuals: np.ndarray
    predictions: np.ndarray
    residuals: np.ndarray
    errors: dict[int, str]
    report: MetricReport | None
    fit_time: float
    score_time: float

    @property
    def missing(self) -> int:
        """Number of steps without a prediction."""
        return int(np.isnan(self.predictions).sum())


def _check_order(pretrain: FeatureMatrix, stream: FeatureMatrix) -> None:
    for name, matrix in (("pretrain", pretrain), ("stream", stream)):
        if not matrix.timestamps.is_monotonic_increasing:
            msg = f"{name} rows are not in time order"
            raise DataError(msg)
    if len(pretrain) and len(stream) and pretrain.timestamps[-1] >= stream.timestamps[0]:
        msg = f"pretrain ends at {pretrain.timestamps[-1]} but the stream starts at {stream.timestamps[0]}"
        raise DataError(msg)


@export
def progressive_validation(model: OnlineRegressor, pretrain: FeatureMatrix, stream: FeatureMatrix) -> ProgressiveResult:
    """
    Pretrain in order, then for each stream row predict first and learn from the true value after.

    Both matrices must share the scalers fitted on ``pretrain``. A step whose prediction raises
    is recorded and not learned from; a failed update leaves the state as it was and the step
    counts as missing.
    """
    _check_order(pretrain, stream)

    started = time.perf_counter()
    if len(pretrain):
        model.fit(pretrain.rows, training_targets(model, pretrain))
    fit_time = time.perf_counter() - started

    targets = training_targets(model, stream)
    raw = np.full(len(stream), np.nan)
    errors: dict[int, str] = {}
    started = time.perf_counter()
    for step, (x, y) in enumerate(zip(stream.rows, targets)):
        try:
            value = model.predict_one(x)
        except ForecastImpactError as exc:
            log.warning("Step %d (%s): prediction failed: %s", step, stream.timestamps[step], exc)
            errors[step] = str(exc)
            continue
        if np.isfinite(value):
            raw[step] = value
        else:
            errors[step] = f"non-finite prediction {value}"
        try:
            model.learn_one(x, float(y))
        except ForecastImpactError as exc:
            log.warning("Step %d (%s): update skipped: %s", step, stream.timestamps[step], exc)
            errors[step] = str(exc)
            raw[step] = np.nan
    score_time = time.perf_counter() - started

    predictions = np.full(len(stream), np.nan)
    present = ~np.isnan(raw)
    if present.any():
        predictions[present] = to_mwh(model, stream, raw[present])
    residuals = stream.targets - predictions

    report = None
    if present.sum() >= 2:  # noqa: PLR2004
        report = compute_metrics(
            stream.targets[present],
            predictions[present],
            fit_time=fit_time,
            score_time=score_time,
        )
    log.debug("Progressive validation: %d steps, %d missing, %d errors", len(stream), (~present).sum(), len(errors))
    return ProgressiveResult(
        timestamps=stream.timestamps,
        actuals=stream.targets.copy(),
        predictions=predictions,
        residuals=residuals,
        errors=errors,
        report=report,
        fit_time=fit_time,
        score_time=score_time,
    )
