"""Fit per-hour models for each configured algorithm, and score saved models against demand data."""

from __future__ import annotations

import inspect
import json
import logging
from pathlib import Path
from typing import TYPE_CHECKING, Any

import click
import numpy as np
import pandas as pd

from forecast_impact.__main__ import main, reporting, summary
from forecast_impact.config import stream_seed, with_overrides
from forecast_impact.data import MinMaxScaler, apply_scaler, build_features, label_calendar, split_train_test
from forecast_impact.data.ingest import TIMESTAMP_FORMAT
from forecast_impact.errors import DimensionMismatchError, FitError
from forecast_impact.evaluation import (
    compute_metrics,
    grid_search,
    per_hour_orchestrate,
    persistence_baseline,
    predict_matrix,
    reserve_analysis,
)
from forecast_impact.learners import OFFLINE_GRIDS, ONLINE_GRIDS, REGRESSORS, dump_model, expand_grid, load_model
from forecast_impact.utils import load_demand, output_dir, write_manifest, write_table


if TYPE_CHECKING:
    from forecast_impact.config import RunConfig
    from forecast_impact.data import DemandSeries
    from forecast_impact.evaluation import HourlyRun, MetricReport


log = logging.getLogger(__name__)

METRIC_COLUMNS = ("rank", "algorithm", "params", "fit_time", "score_time", "mse", "rmse", "mae", "r_squared", "mase")


def _key(params: dict[str, Any]) -> str:
    return json.dumps(params, sort_keys=True, default=list)


def _seeded(kind: str, params: dict[str, Any], seed: int) -> dict[str, Any]:
    if "seed" in inspect.signature(REGRESSORS[kind]).parameters:
        return {"seed": seed, **params}
    return params


def choose_params(kind: str, series: DemandSeries, config: RunConfig, jobs: int = 1) -> dict[str, Any]:
    """
    Hyperparameters for ``kind``: the configured ones, or the winner of a grid search.

    The search cross-validates on the training side of ``search_hour`` and writes its ranked table
    to ``search/<kind>.csv``. Configured parameters missing from the grid are held fixed.
    """
    seed = stream_seed(config.seed, "train")
    params = _seeded(kind, dict(config.train.params.get(kind, {})), seed)
    if not config.train.search:
        return params

    grid = dict(config.train.grids.get(kind) or OFFLINE_GRIDS.get(kind) or ONLINE_GRIDS.get(kind) or {})
    grid |= {name: [value] for name, value in params.items() if name not in grid}
    features = config.features
    matrix = build_features(
        series,
        target_hour=config.train.search_hour,
        lag_days=features.lag_days,
        lag_window=features.lag_window,
        seasons=config.data.seasons,
    )
    train, _ = split_train_test(matrix, config.data.boundary)
    table = grid_search(kind, grid, train, config.train.n_splits, config.train.cv_mode, seed, jobs)
    write_table(table, output_dir(config, "search") / f"{kind}.csv", config)

    best = table.iloc[0]
    if best["status"] != "ok":
        msg = f"every {kind} combination failed the grid search; best status: {best['status']}"
        raise FitError(msg)
    combos = {_key(combo): combo for combo in expand_grid(grid)}
    log.info("%s: best of %d combination(s) is %s (MAE %.1f MWh)", kind, len(combos), best["params"], best["mean_mae"])
    return combos[best["params"]]


def residual_frame(predictions: pd.Series, actuals: pd.Series) -> pd.DataFrame:
    """Pooled residual table, in time order, leaving out hours without a prediction."""
    present = predictions.notna().to_numpy()
    timestamps = pd.DatetimeIndex(predictions.index)[present]
    return pd.DataFrame(
        {
            "timestamp": timestamps.strftime(TIMESTAMP_FORMAT),
            "hour": timestamps.hour,
            "actual": actuals.to_numpy()[present],
            "predicted": predictions.to_numpy()[present],
            "residual": (actuals - predictions).to_numpy()[present],
        },
    )


def metric_row(kind: str, params: dict[str, Any], report: MetricReport, missing: int = 0) -> dict[str, Any]:
    """One row of the metric table."""
    return {"algorithm": kind, "params": _key(params), **report.model_dump(), "missing": missing}


def rank_metrics(rows: list[dict[str, Any]]) -> pd.DataFrame:
    """Order algorithms by MAE, then name."""
    table = pd.DataFrame(rows).sort_values(["mae", "algorithm"], kind="stable").reset_index(drop=True)
    table.insert(0, "rank", np.arange(1, len(table) + 1))
    return table[[*METRIC_COLUMNS, "n", "missing"]]


def save_run(run: HourlyRun, config: RunConfig) -> Path:
    """Write one model document per hour and the pooled residuals of ``run``."""
    models = output_dir(config, "models", run.kind)
    for result in run.hours:
        dump_model(result.model, models / f"hour_{result.hour:02d}.json", result.train)
    residuals = residual_frame(run.predictions, run.actuals)
    write_table(residuals, output_dir(config, "residuals") / f"{run.kind}.csv", config)
    return models


@main.command()  # type: ignore[has-type]
@click.option(
    "-a",
    "--algorithm",
    "algorithms",
    multiple=True,
    help="Algorithm to train; repeat for several [default: train.algorithms].",
)
@click.option(
    "--data",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    default=None,
    help="Demand CSV (overrides data.path and data.synth).",
)
@click.option("--search/--no-search", default=None, help="Grid-search hyperparameters before the per-hour fits.")
@click.option("--seed", type=int, default=None, help="Master seed (overrides seed).")
@click.help_option("-h", "--help")
@click.pass_context
def train(
    ctx: click.Context,
    algorithms: tuple[str, ...],
    data: Path | None,
    search: bool | None,  # noqa: FBT001
    seed: int | None,
) -> None:
    """Fit one model per target hour for each algorithm and rank the algorithms on the test period."""
    with reporting(ctx):
        config = with_overrides(
            ctx.obj["config"],
            {"train.algorithms": algorithms or None, "data.path": data, "train.search": search, "seed": seed},
            clear=("data.synth",) if data is not None else (),
        )
        series = load_demand(config)
        features = config.features

        rows = []
        for kind in config.train.algorithms:
            params = choose_params(kind, series, config, ctx.obj["jobs"])
            run = per_hour_orchestrate(
                series,
                kind,
                params,
                boundary=config.data.boundary,
                hours=features.hours,
                lag_days=features.lag_days,
                lag_window=features.lag_window,
                seasons=config.data.seasons,
                jobs=ctx.obj["jobs"],
            )
            if run.missing:
                log.warning("%s: %d test hour(s) have no prediction", kind, run.missing)
            save_run(run, config)
            rows.append(metric_row(kind, params, run.report, run.missing))

        table = rank_metrics(rows)
        path = write_table(table, output_dir(config) / "metrics.csv", config)
        write_manifest(output_dir(config) / "manifest-train.json", "train", config, algorithms=list(table["algorithm"]))
        best = table.iloc[0]
        summary(
            ctx,
            f"Trained {len(table)} algorithm(s) over {len(features.hours)} hour(s); "
            f"best {best['algorithm']} MAE {best['mae']:.1f} MWh; metrics in {path}",
        )


def evaluate_models(
    directory: Path,
    series: DemandSeries,
    config: RunConfig,
) -> tuple[str, pd.Series, pd.Series]:
    """Predict the test period with every ``hour_*.json`` model in ``directory``: (kind, predictions, actuals)."""
    paths = sorted(directory.glob("hour_*.json"))
    if not paths:
        msg = f"{directory} holds no hour_*.json model documents"
        raise FileNotFoundError(msg)

    calendar = label_calendar(series, config.data.seasons)
    kinds, predictions, actuals = set(), [], []
    for path in paths:
        model, document = load_model(path)
        if document.target_hour is None or document.scaler is None:
            msg = f"{path} does not record its target hour and feature scaler"
            raise FitError(msg)
        matrix = build_features(
            series,
            calendar,
            document.target_hour,
            config.features.lag_days,
            config.features.lag_window,
            config.data.seasons,
        )
        if matrix.n_features != document.n_features:
            raise DimensionMismatchError(document.n_features, matrix.n_features)
        _, test = split_train_test(matrix, config.data.boundary)
        target_scaler = MinMaxScaler.from_dict(document.target_scaler) if document.target_scaler else None
        test = apply_scaler(MinMaxScaler.from_dict(document.scaler), test, target_scaler)
        kinds.add(document.kind)
        predictions.append(pd.Series(predict_matrix(model, test), index=test.timestamps))
        actuals.append(pd.Series(test.targets, index=test.timestamps))
        log.debug("Scored %s hour %02d on %d rows", document.kind, document.target_hour, len(test))

    if len(kinds) != 1:
        msg = f"{directory} mixes model kinds: {', '.join(sorted(kinds))}"
        raise FitError(msg)
    return kinds.pop(), pd.concat(predictions).sort_index(), pd.concat(actuals).sort_index()


@main.command()  # type: ignore[has-type]
@click.argument("models", type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option(
    "--data",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    default=None,
    help="Demand CSV (overrides data.path and data.synth).",
)
@click.option(
    "--max-reserve",
    type=click.FloatRange(min=0, min_open=True),
    default=None,
    help="Maximum tendered reserve in MWh [default: simulate.max_reserve, 6000].",
)
@click.option(
    "--avg-reserve",
    type=click.FloatRange(min=0, min_open=True),
    default=None,
    help="Average tendered reserve in MWh [default: simulate.avg_reserve, 2000].",
)
@click.help_option("-h", "--help")
@click.pass_context
def evaluate(
    ctx: click.Context,
    models: Path,
    data: Path | None,
    max_reserve: float | None,
    avg_reserve: float | None,
) -> None:
    """Score the per-hour models in MODELS on the test period and measure how often reserve covers the error."""
    with reporting(ctx):
        config = with_overrides(
            ctx.obj["config"],
            {"data.path": data, "simulate.max_reserve": max_reserve, "simulate.avg_reserve": avg_reserve},
            clear=("data.synth",) if data is not None else (),
        )
        series = load_demand(config)
        kind, predictions, actuals = evaluate_models(models, series, config)
        residuals = residual_frame(predictions, actuals)

        present = predictions.notna().to_numpy()
        timestamps = pd.DatetimeIndex(predictions.index)[present]
        report = compute_metrics(
            actuals.to_numpy()[present],
            predictions.to_numpy()[present],
            naive_baseline=persistence_baseline(series, timestamps),
        )
        reserve = reserve_analysis(
            residuals["residual"].to_numpy(),
            max_reserve=config.simulate.max_reserve,
            avg_reserve=config.simulate.avg_reserve,
        )

        directory = output_dir(config, "evaluation")
        write_table(residuals, directory / f"{kind}-residuals.csv", config)
        metrics = pd.DataFrame([metric_row(kind, {}, report, int((~present).sum()))])
        write_table(metrics, directory / f"{kind}-metrics.csv", config)
        write_table(pd.DataFrame([reserve.model_dump()]), directory / f"{kind}-reserve.csv", config)
        write_manifest(directory / f"manifest-{kind}.json", "evaluate", config, models=str(models))
        summary(
            ctx,
            f"{kind}: MAE {report.mae:.1f} MWh over {report.n} hours; "
            f"{reserve.frac_within_max:.1%} within {reserve.max_reserve:g} MWh reserve; tables in {directory}",
        )
