"""K-fold cross-validated grid search over one regressor kind."""

from __future__ import annotations

import json
import logging
import time
from typing import TYPE_CHECKING, Any, Literal

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from forecast_impact.data import scale_split
from forecast_impact.errors import ConfigError, ForecastImpactError, UnsupportedHyperparameterError
from forecast_impact.evaluation import export
from forecast_impact.evaluation.metrics import compute_metrics
from forecast_impact.evaluation.utils import fit_matrix, predict_matrix
from forecast_impact.learners import expand_grid, make_regressor


if TYPE_CHECKING:
    from forecast_impact.data import FeatureMatrix


log = logging.getLogger(__name__)

SplitStrategy = Literal["random", "time_ordered"]

SEARCH_COLUMNS = (
    "rank",
    "estimator",
    "params",
    "status",
    "mean_fit_time",
    "mean_score_time",
    "mean_mse",
    "mean_rmse",
    "mean_mae",
    "sd_mae",
    "mean_r2",
)


@export
def cv_splits(
    n: int,
    n_splits: int,
    mode: SplitStrategy = "random",
    seed: int = 0,
) -> list[tuple[np.ndarray, np.ndarray]]:
    """
    (train, test) row indices for each fold.

    ``random`` deals a seeded permutation into ``n_splits`` folds; training rows may then come after
    test rows in time. ``time_ordered`` cuts the rows into ``n_splits + 1`` consecutive chunks and
    tests each chunk after the first on everything before it.
    """
    if mode not in ("random", "time_ordered"):
        msg = f"unknown split mode {mode!r}"
        raise ConfigError(msg)
    chunks_needed = n_splits + 1 if mode == "time_ordered" else n_splits
    if n_splits < 2 or chunks_needed > n:  # noqa: PLR2004
        msg = f"cannot make {n_splits} {mode} folds from {n} rows"
        raise ConfigError(msg)

    if mode == "random":
        folds = np.array_split(np.random.default_rng(seed).permutation(n), n_splits)
        everything = np.arange(n)
        return [(np.setdiff1d(everything, fold), np.sort(fold)) for fold in folds]

    chunks = np.array_split(np.arange(n), chunks_needed)
    return [(np.concatenate(chunks[:i]), chunks[i]) for i in range(1, chunks_needed)]


def _params_key(params: dict[str, Any]) -> str:
    return json.dumps(params, sort_keys=True, default=list)


@export
def cross_validate(  # noqa: PLR0913
    kind: str,
    params: dict[str, Any],
    matrix: FeatureMatrix,
    n_splits: int = 10,
    mode: SplitStrategy = "random",
    seed: int = 0,
) -> dict[str, Any]:
    """
    Score one hyperparameter combination on every fold of an unscaled matrix.

    Scalers are refitted on each fold's training rows. Metrics are in MWh.
    """
    row: dict[str, Any] = {
        "estimator": kind,
        "params": _params_key(params),
        "status": "ok",
        "mean_fit_time": np.nan,
        "mean_score_time": np.nan,
        "mean_mse": np.nan,
        "mean_rmse": np.nan,
        "mean_mae": np.nan,
        "sd_mae": np.nan,
        "mean_r2": np.nan,
    }
    try:
        make_regressor(kind, **params)
    except UnsupportedHyperparameterError as exc:
        log.info("%s %s is unsupported: %s", kind, row["params"], exc)
        row["status"] = f"unsupported: {exc}"
        return row

    reports = []
    for train_rows, test_rows in cv_splits(len(matrix), n_splits, mode, seed):
        train, test = scale_split(matrix.take(train_rows), matrix.take(test_rows))
        model = make_regressor(kind, **params)
        try:
            started = time.perf_counter()
            fit_matrix(model, train)
            fit_time = time.perf_counter() - started
            started = time.perf_counter()
            predicted = predict_matrix(model, test)
            score_time = time.perf_counter() - started
            reports.append(compute_metrics(test.targets, predicted, fit_time=fit_time, score_time=score_time))
        except ForecastImpactError as exc:
            log.warning("%s %s failed on a fold: %s", kind, row["params"], exc)
            row["status"] = f"failed: {exc}"
            return row

    maes = np.array([report.mae for report in reports])
    r2 = [report.r_squared for report in reports if report.r_squared is not None]
    row |= {
        "mean_fit_time": float(np.mean([report.fit_time for report in reports])),
        "mean_score_time": float(np.mean([report.score_time for report in reports])),
        "mean_mse": float(np.mean([report.mse for report in reports])),
        "mean_rmse": float(np.mean([report.rmse for report in reports])),
        "mean_mae": float(maes.mean()),
        "sd_mae": float(maes.std()),
        "mean_r2": float(np.mean(r2)) if r2 else np.nan,
    }
    return row


@export
def grid_search(  # noqa: PLR0913
    kind: str,
    grid: dict[str, list[Any]],
    matrix: FeatureMatrix,
    n_splits: int = 10,
    mode: SplitStrategy = "random",
    seed: int = 0,
    jobs: int = 1,
) -> pd.DataFrame:
    """
    Cross-validate every combination in ``grid`` and rank them.

    Successful combinations rank by mean MAE, then mean fit time, then their parameters; failed and
    unsupported ones follow in grid order. Every combination sees the same folds, and the table does
    not depend on ``jobs``.
    """
    combos = expand_grid(grid)
    if mode == "random":
        log.warning("Random folds let training rows come after test rows in time; scores may be optimistic")
    log.info("Searching %d %s combination(s) over %d folds", len(combos), kind, n_splits)

    rows = Parallel(n_jobs=jobs)(
        delayed(cross_validate)(kind, params, matrix, n_splits, mode, seed) for params in combos
    )
    table = pd.DataFrame(rows)
    ok = table["status"] == "ok"
    ranked = pd.concat(
        [
            table[ok].sort_values(["mean_mae", "mean_fit_time", "params"], kind="stable"),
            table[~ok],
        ],
    ).reset_index(drop=True)
    ranked.insert(0, "rank", np.arange(1, len(ranked) + 1))
    return ranked[list(SEARCH_COLUMNS)]
