"""Tests for metrics, reserve analysis, grid search and the per-hour pipelines."""

import json
import os
from datetime import date
from pathlib import Path

import numpy as np
import pandas as pd
import pytest
from scipy import stats

from forecast_impact.data import FeatureMatrix, ingest_demand_csv, scale_split, synth_demand
from forecast_impact.errors import (
    ConfigError,
    DataError,
    FitError,
    LengthMismatchError,
    NonFiniteUpdateError,
)
from forecast_impact.evaluation import (
    compute_metrics,
    cross_validate,
    cv_splits,
    drift_benchmark,
    grid_search,
    per_hour_orchestrate,
    persistence_baseline,
    progressive_validation,
    reserve_analysis,
)
from forecast_impact.learners import OnlineRegressor


DRIFT_RECORD = Path(__file__).parent / "test_data" / "drift_benchmark.json"


def daily_matrix(targets: np.ndarray, rows: np.ndarray | None = None, start: str = "2016-01-01") -> FeatureMatrix:
    targets = np.asarray(targets, dtype=float)
    if rows is None:
        rows = np.arange(len(targets), dtype=float)[:, None]
    rows = np.asarray(rows, dtype=float)
    return FeatureMatrix(
        rows=rows,
        targets=targets,
        timestamps=pd.date_range(start, periods=len(targets), freq="D"),
        feature_names=tuple(f"f{j}" for j in range(rows.shape[1])),
        target_hour=0,
    )


def small_series(n_days: int = 120, **kwargs: float):
    params = {
        "base": 30000.0,
        "daily_amp": 4000.0,
        "weekly_amp": 2000.0,
        "seasonal_amp": 1000.0,
        "noise_sd": 300.0,
        "drift_per_year": 0.0,
    }
    params.update(kwargs)
    return synth_demand(start=date(2016, 1, 1), n_days=n_days, seed=3, **params)


class LastValue(OnlineRegressor):
    """Predicts the last target it learned."""

    kind = "last_value"
    state_fields = ("last",)

    def __init__(self) -> None:
        """Start from zero."""
        super().__init__()
        self.last = 0.0

    def _init_state(self, n_features: int) -> None:
        self.last = 0.0

    def _predict_one(self, x: np.ndarray) -> float:
        return self.last

    def _learn_one(self, x: np.ndarray, y: float) -> None:
        self.last = y


class Flaky(LastValue):
    """Fails to predict on its third call and refuses to learn targets above ``ceiling``."""

    kind = "flaky"

    def __init__(self, ceiling: float) -> None:
        """Set the largest target it accepts."""
        super().__init__()
        self.ceiling = ceiling
        self.calls = 0

    def _predict_one(self, x: np.ndarray) -> float:
        self.calls += 1
        if self.calls == 3:
            msg = "prediction failed"
            raise FitError(msg)
        return self.last

    def _learn_one(self, x: np.ndarray, y: float) -> None:
        if y > self.ceiling:
            msg = "update rejected"
            raise NonFiniteUpdateError(msg)
        self.last = y


###########
# Metrics #
###########
def test_metrics_by_hand():
    report = compute_metrics(np.array([1.0, 2.0, 3.0, 4.0]), np.array([1.0, 2.0, 3.0, 5.0]))
    assert report.mae == pytest.approx(0.25)
    assert report.mse == pytest.approx(0.25)
    assert report.rmse == pytest.approx(0.5)
    assert report.r_squared == pytest.approx(0.8)
    assert report.mase is None
    assert report.n == 4


def test_r_squared_undefined_for_constant_actuals():
    report = compute_metrics(np.full(5, 7.0), np.array([7.0, 7.0, 8.0, 7.0, 7.0]))
    assert report.r_squared is None
    assert report.mae == pytest.approx(0.2)


def test_mase_against_naive_baseline():
    actual = np.array([10.0, 12.0, 14.0, 16.0])
    report = compute_metrics(actual, np.array([11.0, 12.0, 14.0, 16.0]), naive_baseline=actual - 2.0)
    assert report.mase == pytest.approx(0.125)
    assert compute_metrics(actual, actual + 1.0, naive_baseline=actual).mase is None


def test_metrics_reject_bad_input():
    with pytest.raises(LengthMismatchError):
        compute_metrics(np.zeros(3), np.zeros(4))
    with pytest.raises(LengthMismatchError):
        compute_metrics(np.zeros(1), np.zeros(1))
    with pytest.raises(DataError):
        compute_metrics(np.array([1.0, np.nan]), np.zeros(2))


def test_persistence_baseline_is_previous_day():
    series = small_series(10)
    timestamps = series.timestamps[48:60]
    assert persistence_baseline(series, timestamps).tolist() == series.demand[24:36].tolist()
    with pytest.raises(DataError):
        persistence_baseline(series, series.timestamps[:5])


###########
# Reserve #
###########
def test_reserve_fractions():
    residuals = np.array([-7000.0, -3000.0, 0.0, 1000.0, 2000.0, 6000.0, 6500.0])
    report = reserve_analysis(residuals)
    assert report.frac_within_max == pytest.approx(5 / 7)
    assert report.frac_within_avg == pytest.approx(3 / 7)
    assert report.p5 == pytest.approx(np.percentile(residuals, 5))
    assert report.p95 == pytest.approx(np.percentile(residuals, 95))
    assert report.n == 7


def test_reserve_fraction_shrinks_with_threshold():
    residuals = np.random.default_rng(0).normal(0.0, 2500.0, 1000)
    thresholds = (8000.0, 4000.0, 2000.0, 500.0, 0.0)
    fractions = [reserve_analysis(residuals, threshold, threshold).frac_within_max for threshold in thresholds]
    assert all(a >= b for a, b in zip(fractions, fractions[1:]))


def test_normal_errors_against_the_national_reserve():
    residuals = np.random.default_rng(0).normal(0.0, 2500.0, 8760)
    report = reserve_analysis(residuals)
    assert report.max_reserve == 6000.0
    assert 0.975 <= report.frac_within_max <= 0.995
    analytic = stats.norm.cdf(6000.0, scale=2500.0) - stats.norm.cdf(-6000.0, scale=2500.0)
    assert analytic == pytest.approx(0.9836, abs=1e-4)
    assert report.frac_within_max == pytest.approx(analytic, abs=0.005)


def test_zero_residuals_are_always_covered():
    report = reserve_analysis(np.zeros(24))
    assert report.frac_within_max == report.frac_within_avg == 1.0


def test_reserve_needs_residuals():
    with pytest.raises(DataError):
        reserve_analysis(np.array([]))


###############
# Grid search #
###############
def test_random_folds_partition_rows():
    splits = cv_splits(23, 5, "random", seed=4)
    tests = np.concatenate([test for _, test in splits])
    assert sorted(tests.tolist()) == list(range(23))
    for train, test in splits:
        assert not set(train) & set(test)
        assert len(train) + len(test) == 23


def test_time_ordered_folds_only_look_back():
    splits = cv_splits(30, 4, "time_ordered")
    assert len(splits) == 4
    for train, test in splits:
        assert train.max() < test.min()
    assert [len(train) for train, _ in splits] == sorted(len(train) for train, _ in splits)


def test_fold_count_checks():
    with pytest.raises(ConfigError):
        cv_splits(5, 6)
    with pytest.raises(ConfigError):
        cv_splits(5, 5, "time_ordered")
    with pytest.raises(ConfigError):
        cv_splits(5, 1)
    with pytest.raises(ConfigError):
        cv_splits(10, 2, "shuffled")


def noisy_collinear(n: int = 40, width: int = 20, seed: int = 0) -> FeatureMatrix:
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(n)
    rows = z[:, None] + 1e-6 * rng.standard_normal((n, width))
    return daily_matrix(rng.normal(1000.0, 50.0, n), rows)


def test_singleton_grid_is_cross_validation():
    matrix = noisy_collinear()
    table = grid_search("knn", {"k": [5]}, matrix, n_splits=5, seed=2)
    direct = cross_validate("knn", {"k": 5}, matrix, n_splits=5, seed=2)
    assert len(table) == 1
    assert table.loc[0, "mean_mae"] == pytest.approx(direct["mean_mae"])
    assert table.loc[0, "rank"] == 1


def test_heavy_ridge_wins_on_collinear_noise():
    table = grid_search("ridge", {"lam": [0.0, 1e6]}, noisy_collinear(), n_splits=5, seed=1)
    assert table.loc[0, "params"] == '{"lam": 1000000.0}'


def test_failed_and_unsupported_rank_last():
    table = grid_search("knn", {"k": [0, 3, 500]}, noisy_collinear(), n_splits=5)
    assert table["status"].tolist()[0] == "ok"
    assert table.loc[0, "params"] == '{"k": 3}'
    assert table["status"].tolist()[1].startswith("unsupported")
    assert table["status"].tolist()[2].startswith("failed")
    assert np.isnan(table.loc[2, "mean_mae"])
    assert table["rank"].tolist() == [1, 2, 3]


def test_search_does_not_depend_on_jobs():
    matrix = noisy_collinear(seed=5)
    serial = grid_search("knn", {"k": [2, 4, 8]}, matrix, n_splits=4, jobs=1)
    parallel = grid_search("knn", {"k": [2, 4, 8]}, matrix, n_splits=4, jobs=2)
    assert serial["params"].tolist() == parallel["params"].tolist()
    assert serial["mean_mae"].tolist() == parallel["mean_mae"].tolist()


def test_unknown_kind_is_a_config_error():
    with pytest.raises(ConfigError):
        grid_search("mystery", {}, noisy_collinear(), n_splits=4)


##########################
# Progressive validation #
##########################
def pretrain_and_stream(stream_targets: np.ndarray):
    pretrain = daily_matrix(np.arange(1.0, 11.0))
    stream = daily_matrix(stream_targets, start="2016-01-11")
    return scale_split(pretrain, stream)


def test_constant_stream_is_memorised():
    result = progressive_validation(LastValue(), *pretrain_and_stream(np.full(6, 10.0)))
    assert result.residuals == pytest.approx(np.zeros(6), abs=1e-9)
    assert result.missing == 0
    assert result.report is not None
    assert result.report.mae == pytest.approx(0.0, abs=1e-9)


def test_prediction_comes_before_learning():
    result = progressive_validation(LastValue(), *pretrain_and_stream(np.full(3, 20.0)))
    assert result.residuals == pytest.approx([10.0, 0.0, 0.0])

    # learning first would hide the jump
    model = LastValue()
    pretrain, stream = pretrain_and_stream(np.full(3, 20.0))
    model.fit(pretrain.rows, pretrain.scaled_targets())
    learn_first = []
    for x, y in zip(stream.rows, stream.scaled_targets()):
        model.learn_one(x, y)
        learn_first.append(model.predict_one(x))
    assert stream.unscale_targets(np.array(learn_first)) == pytest.approx([20.0, 20.0, 20.0])
    assert abs(result.residuals[0]) > 0.0


def test_step_errors_are_recorded():
    model = Flaky(ceiling=1.5)
    result = progressive_validation(model, *pretrain_and_stream(np.array([10.0, 10.0, 10.0, 30.0, 10.0])))
    assert model.updates_seen == 10 + 3
    assert np.isnan(result.predictions[2])
    assert np.isnan(result.predictions[3])
    assert np.isnan(result.residuals[3])
    assert result.missing == 2
    assert set(result.errors) == {2, 3}
    assert result.report is not None
    assert result.report.n == 3


def test_stream_must_follow_pretraining():
    pretrain = daily_matrix(np.arange(1.0, 11.0), start="2016-02-01")
    stream = daily_matrix(np.ones(3), start="2016-01-01")
    with pytest.raises(DataError):
        progressive_validation(LastValue(), *scale_split(pretrain, stream))


##########################
# Per-hour orchestration #
##########################
def test_offline_run_pools_hours_in_time_order():
    series = small_series()
    run = per_hour_orchestrate(series, "knn", {"k": 5}, boundary=date(2016, 4, 1), hours=(6, 0, 18))
    assert run.residuals.index.is_monotonic_increasing
    assert len(run.residuals) == sum(len(result.test) for result in run.hours) == run.report.n
    assert set(run.models) == {0, 6, 18}
    assert run.residuals.to_numpy() == pytest.approx((run.actuals - run.predictions).to_numpy())
    assert run.report.mase is not None
    assert run.missing == 0


def test_online_run_uses_progressive_validation():
    series = small_series()
    run = per_hour_orchestrate(series, "online_linear", {"eta": 0.001}, boundary=date(2016, 4, 1), hours=(0, 12))
    for result in run.hours:
        assert result.model.updates_seen == len(result.train) + len(result.test)
    assert np.all(np.isfinite(run.residuals.to_numpy()))


def test_orchestration_is_repeatable():
    series = small_series()
    params = {"n_estimators": 4, "seed": 2}
    first = per_hour_orchestrate(series, "extra_trees", params, date(2016, 4, 1), (0, 1))
    second = per_hour_orchestrate(series, "extra_trees", params, date(2016, 4, 1), (0, 1), jobs=2)
    assert first.residuals.tolist() == second.residuals.tolist()


def test_hours_must_be_distinct():
    with pytest.raises(ConfigError):
        per_hour_orchestrate(small_series(), "knn", hours=(1, 1))


def test_online_learner_beats_trees_under_drift():
    result = drift_benchmark(hours=(0, 12), n_estimators=16, lag_days=(1, 7), lag_window=4)
    assert result.online.report.mae < result.offline.report.mae
    assert result.improvement > 0


@pytest.mark.slow
def test_drift_benchmark_matches_recorded_gap():
    result = drift_benchmark()
    measured = {
        "offline_mae": result.offline.report.mae,
        "online_mae": result.online.report.mae,
        "improvement": result.improvement,
    }
    assert measured["online_mae"] < measured["offline_mae"]
    if os.environ.get("FORECAST_IMPACT_RECORD_BENCHMARK"):
        DRIFT_RECORD.write_text(json.dumps(measured, indent=2) + "\n")
    recorded = json.loads(DRIFT_RECORD.read_text())
    for name, value in recorded.items():
        if value is not None:
            assert measured[name] == pytest.approx(value, rel=1e-6)


@pytest.mark.skipif(
    "FORECAST_IMPACT_GB_DEMAND" not in os.environ,
    reason="set FORECAST_IMPACT_GB_DEMAND to a demand CSV to run against real data",
)
def test_real_demand_reproduction():
    series = ingest_demand_csv(Path(os.environ["FORECAST_IMPACT_GB_DEMAND"]))
    boundary = date(2018, 1, 1)
    if series.end.date() <= boundary:
        boundary = (series.end - pd.Timedelta(days=365)).date()
    offline = per_hour_orchestrate(series, "extra_trees", {"n_estimators": 32, "seed": 0}, boundary=boundary)
    online = per_hour_orchestrate(series, "boxcox", {"power": 0.1}, boundary=boundary)
    assert offline.report.mae == pytest.approx(1605.0, rel=0.2)
    assert online.report.mae == pytest.approx(1214.95, rel=0.2)
    assert online.report.mae < offline.report.mae
    assert reserve_analysis(online.residuals.dropna().to_numpy()).frac_within_max > 0.9
