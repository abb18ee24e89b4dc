"""Point-forecast error metrics."""

from __future__ import annotations

import logging
from typing import TYPE_CHECKING

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict

from forecast_impact.errors import DataError, LengthMismatchError
from forecast_impact.evaluation import export


if TYPE_CHECKING:
    from forecast_impact.data import DemandSeries


log = logging.getLogger(__name__)


@export
class MetricReport(BaseModel):
    """Error summary of one set of predictions; undefined ratios are None rather than 0."""

    model_config = ConfigDict(frozen=True)

    mae: float
    mse: float
    rmse: float
    r_squared: float | None
    mase: float | None = None
    fit_time: float = 0.0
    score_time: float = 0.0
    n: int


def _as_vector(values: np.ndarray, name: str) -> np.ndarray:
    vector = np.asarray(values, dtype=float).ravel()
    if not np.all(np.isfinite(vector)):
        msg = f"{name} contains non-finite values"
        raise DataError(msg)
    return vector


@export
def compute_metrics(
    actual: np.ndarray,
    predicted: np.ndarray,
    naive_baseline: np.ndarray | None = None,
    fit_time: float = 0.0,
    score_time: float = 0.0,
) -> MetricReport:
    """
    MAE, MSE, RMSE and R-squared, plus MASE when a naive baseline forecast is given.

    MASE is the model MAE divided by the baseline's MAE on the same actuals.
    """
    a, p = _as_vector(actual, "actual"), _as_vector(predicted, "predicted")
    if len(a) != len(p):
        msg = f"{len(a)} actual values but {len(p)} predictions"
        raise LengthMismatchError(msg)
    if len(a) < 2:  # noqa: PLR2004
        msg = f"metrics need at least 2 values, got {len(a)}"
        raise LengthMismatchError(msg)

    error = a - p
    mae = float(np.mean(np.abs(error)))
    mse = float(np.mean(error * error))
    total = float(np.sum((a - a.mean()) ** 2))
    r_squared = 1.0 - float(error @ error) / total if total > 0 else None
    if r_squared is None:
        log.debug("actual values have zero variance; R-squared is undefined")

    mase = None
    if naive_baseline is not None:
        naive = _as_vector(naive_baseline, "naive_baseline")
        if len(naive) != len(a):
            msg = f"{len(a)} actual values but {len(naive)} baseline values"
            raise LengthMismatchError(msg)
        naive_mae = float(np.mean(np.abs(a - naive)))
        if naive_mae > 0:
            mase = mae / naive_mae
        else:
            log.debug("naive baseline is exact; MASE is undefined")

    return MetricReport(
        mae=mae,
        mse=mse,
        rmse=float(np.sqrt(mse)),
        r_squared=r_squared,
        mase=mase,
        fit_time=fit_time,
        score_time=score_time,
        n=len(a),
    )


@export
def persistence_baseline(series: DemandSeries, timestamps: pd.DatetimeIndex, days: int = 1) -> np.ndarray:
    """Demand observed at the same hour ``days`` earlier, the naive forecast for MASE."""
    earlier = pd.DatetimeIndex(timestamps) - pd.Timedelta(days=days)
    positions = series.timestamps.get_indexer(earlier)
    if np.any(positions < 0):
        missing = earlier[np.flatnonzero(positions < 0)[0]]
        msg = f"no observation at {missing.isoformat()} for the persistence baseline"
        raise DataError(msg)
    return series.demand[positions]
