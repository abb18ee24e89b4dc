"""Tests for the run configuration and the command-line pipeline."""

import json
from datetime import date
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd
import pytest
import yaml
from click.testing import CliRunner, Result
from pydantic import ValidationError

from forecast_impact.__main__ import main
from forecast_impact.config import RunConfig, config_hash, load_config, stream_seed, with_overrides
from forecast_impact.errors import ConfigError


TEST_DATA = Path(__file__).parent / "test_data"
TOY_SCENARIO = TEST_DATA / "toy_scenario.yaml"

SYNTH = {
    "start": date(2016, 1, 1),
    "n_days": 730,
    "base": 30000.0,
    "daily_amp": 4000.0,
    "weekly_amp": 2000.0,
    "seasonal_amp": 1000.0,
    "noise_sd": 300.0,
    "drift_per_year": 0.0,
    "seed": 3,
}


def write_config(directory: Path, **sections: Any) -> Path:  # noqa: ANN401
    raw: dict[str, Any] = {
        "data": {"synth": SYNTH, "boundary": date(2017, 7, 1)},
        "features": {"lag_days": [1, 2, 7], "lag_window": 4},
        "train": {"algorithms": ["ols"], "params": {"ols": {"fit_intercept": False}}},
        "output": {"directory": str(directory / "out"), "record_timings": False},
    }
    for name, values in sections.items():
        raw[name] = {**raw.get(name, {}), **values}
    path = directory / "config.yaml"
    path.write_text(yaml.safe_dump(raw))
    return path


def invoke(*args: Any) -> Result:  # noqa: ANN401
    return CliRunner(mix_stderr=False).invoke(main, [str(arg) for arg in args], obj={})


@pytest.fixture(scope="module")
def trained(tmp_path_factory: pytest.TempPathFactory) -> Path:
    directory = tmp_path_factory.mktemp("trained")
    result = invoke("-c", write_config(directory), "train")
    assert result.exit_code == 0, result.stderr
    return directory


#################
# Configuration #
#################
def test_defaults_use_the_drift_scenario():
    config = RunConfig()
    assert config.data.path is None
    assert config.data.synth is not None
    assert config.data.synth.drift_per_year > 0
    assert config.features.hours == tuple(range(24))
    assert len(config.simulate.sweep_sds) == 20


def test_stream_seeds_are_stable_and_distinct():
    assert stream_seed(0, "train") == stream_seed(0, "train")
    assert len({stream_seed(0, name) for name in ("train", "residuals", "simulate")}) == 3
    assert stream_seed(0, "simulate") != stream_seed(1, "simulate")
    with pytest.raises(ConfigError):
        stream_seed(0, "market")


def test_config_hash_tracks_content():
    assert config_hash(RunConfig()) == config_hash(RunConfig())
    assert config_hash(RunConfig()) != config_hash(RunConfig(seed=1))


def test_unknown_algorithm_names_the_field():
    with pytest.raises(ValidationError) as info:
        RunConfig.model_validate({"train": {"algorithms": ["ols", "oracle"]}})
    assert info.value.errors()[0]["loc"][:2] == ("train", "algorithms")


def test_referenced_paths_must_exist(tmp_path: Path):
    with pytest.raises(ValidationError):
        RunConfig.model_validate({"data": {"path": str(tmp_path / "missing.csv")}})
    with pytest.raises(ValidationError):
        RunConfig.model_validate({"simulate": {"scenario": str(tmp_path / "missing.yaml")}})


def test_one_demand_source_and_one_perturbation(tmp_path: Path):
    demand = tmp_path / "demand.csv"
    demand.write_text("timestamp,demand\n")
    with pytest.raises(ValidationError):
        RunConfig.model_validate({"data": {"path": str(demand), "synth": {"n_days": 10}}})
    with pytest.raises(ValidationError):
        RunConfig.model_validate({"simulate": {"normal_sd": 100.0, "distribution": str(demand)}})


def test_unknown_keys_are_rejected():
    with pytest.raises(ValidationError):
        RunConfig.model_validate({"output": {"directroy": "out"}})


def test_flags_override_the_file(tmp_path: Path):
    config = load_config(write_config(tmp_path))
    demand = tmp_path / "demand.csv"
    demand.write_text("timestamp,demand\n")
    updated = with_overrides(
        config,
        {"seed": 5, "train.algorithms": None, "data.path": demand},
        clear=("data.synth",),
    )
    assert updated.seed == 5
    assert updated.train.algorithms == ("ols",)
    assert updated.data.path == demand
    assert updated.data.synth is None
    assert config_hash(updated) != config_hash(config)


def test_config_file_errors(tmp_path: Path):
    path = tmp_path / "config.yaml"
    path.write_text("- a\n- b\n")
    with pytest.raises(ConfigError):
        load_config(path)
    path.write_text("seed: [\n")
    with pytest.raises(ConfigError):
        load_config(path)
    path.write_text("")
    assert load_config(path) == RunConfig()


#########################
# Ingest and generation #
#########################
def test_help_lists_every_command():
    result = invoke("--help")
    assert result.exit_code == 0
    for command in ("ingest", "synth", "train", "evaluate", "fit-residuals", "simulate", "sensitivity", "report"):
        assert command in result.output


def test_synth_then_ingest(tmp_path: Path):
    result = invoke("-o", tmp_path, "synth", "--days", 10, "--seed", 4, "--noise-sd", 0)
    assert result.exit_code == 0, result.stderr
    assert "240 hourly observations" in result.output
    written = pd.read_csv(tmp_path / "demand.csv")
    assert list(written.columns) == ["timestamp", "demand"]
    assert len(written) == 240

    shuffled = tmp_path / "shuffled.csv"
    written.rename(columns={"timestamp": "when", "demand": "load"}).sample(frac=1.0, random_state=0).to_csv(
        shuffled,
        index=False,
    )
    target = tmp_path / "canonical.csv"
    result = invoke(
        "ingest",
        shuffled,
        "--timestamp-column",
        "when",
        "--demand-column",
        "load",
        "--to",
        target,
    )
    assert result.exit_code == 0, result.stderr
    assert target.read_text() == (tmp_path / "demand.csv").read_text()


def test_synth_is_seeded(tmp_path: Path):
    for name in ("a.csv", "b.csv"):
        assert invoke("synth", "--days", 5, "--seed", 9, "--to", tmp_path / name).exit_code == 0
    assert (tmp_path / "a.csv").read_text() == (tmp_path / "b.csv").read_text()


def test_ingest_reports_bad_data(tmp_path: Path):
    path = tmp_path / "gap.csv"
    path.write_text("timestamp,demand\n2016-01-01T00:00:00,1\n2016-01-01T02:00:00,1\n")
    result = invoke("-o", tmp_path, "ingest", path)
    assert result.exit_code == 1
    assert "GapInSeriesError" in result.stderr


##########################
# Training and scoring #
##########################
def test_train_writes_a_model_per_hour(trained: Path):
    out = trained / "out"
    assert len(list((out / "models" / "ols").glob("hour_*.json"))) == 24
    metrics = pd.read_csv(out / "metrics.csv")
    assert len(metrics) == 1
    assert metrics.loc[0, "algorithm"] == "ols"
    assert metrics.loc[0, "rank"] == 1
    assert "fit_time" not in metrics.columns
    residuals = pd.read_csv(out / "residuals" / "ols.csv")
    assert len(residuals) == metrics.loc[0, "n"]
    assert residuals["residual"].to_numpy() == pytest.approx((residuals["actual"] - residuals["predicted"]).to_numpy())
    manifest = json.loads((out / "manifest-train.json").read_text())
    assert manifest["command"] == "train"
    assert manifest["config_hash"] == config_hash(load_config(trained / "config.yaml"))


def test_train_is_repeatable(trained: Path, tmp_path: Path):
    result = invoke("-c", trained / "config.yaml", "-o", tmp_path, "train")
    assert result.exit_code == 0, result.stderr
    assert (tmp_path / "metrics.csv").read_bytes() == (trained / "out" / "metrics.csv").read_bytes()


def test_train_rejects_unknown_algorithm(tmp_path: Path):
    result = invoke("-o", tmp_path, "train", "-a", "oracle")
    assert result.exit_code == 2
    assert "train.algorithms" in result.stderr
    assert not (tmp_path / "metrics.csv").exists()


def test_singular_least_squares_fails_the_run(tmp_path: Path):
    config = write_config(
        tmp_path,
        data={"synth": {**SYNTH, "n_days": 200}, "boundary": date(2016, 6, 1)},
        features={"hours": [0]},
        train={"params": {}},
    )
    result = invoke("-c", config, "train")
    assert result.exit_code == 1
    assert "SingularDesignError" in result.stderr


def test_train_with_search(tmp_path: Path):
    config = write_config(
        tmp_path,
        data={"synth": {**SYNTH, "n_days": 200}, "boundary": date(2016, 6, 1)},
        features={"hours": [0, 12]},
        train={"algorithms": ["knn"], "grids": {"knn": {"k": [1, 5]}}, "n_splits": 3, "search_hour": 12},
    )
    result = invoke("-c", config, "train", "--search")
    assert result.exit_code == 0, result.stderr
    search = pd.read_csv(tmp_path / "out" / "search" / "knn.csv")
    assert len(search) == 2
    assert list(search["rank"]) == [1, 2]
    metrics = pd.read_csv(tmp_path / "out" / "metrics.csv")
    assert json.loads(metrics.loc[0, "params"]) == json.loads(search.loc[0, "params"])


def test_evaluate_reproduces_training_scores(trained: Path):
    config = trained / "config.yaml"
    models = trained / "out" / "models" / "ols"
    result = invoke("-c", config, "evaluate", models, "--max-reserve", 500, "--avg-reserve", 100)
    assert result.exit_code == 0, result.stderr
    out = trained / "out" / "evaluation"
    trained_metrics = pd.read_csv(trained / "out" / "metrics.csv")
    metrics = pd.read_csv(out / "ols-metrics.csv")
    assert metrics.loc[0, "mae"] == pytest.approx(trained_metrics.loc[0, "mae"], rel=1e-9)
    assert len(pd.read_csv(out / "ols-residuals.csv")) == metrics.loc[0, "n"]
    reserve = pd.read_csv(out / "ols-reserve.csv")
    assert reserve.loc[0, "max_reserve"] == 500
    assert reserve.loc[0, "avg_reserve"] == 100
    assert 0 <= reserve.loc[0, "frac_within_avg"] <= reserve.loc[0, "frac_within_max"] <= 1


def test_evaluate_checks_feature_width(trained: Path, tmp_path: Path):
    config = write_config(tmp_path, features={"lag_days": [1, 2, 7], "lag_window": 3})
    result = invoke("-c", config, "evaluate", trained / "out" / "models" / "ols")
    assert result.exit_code == 1
    assert "DimensionMismatchError" in result.stderr


####################
# Residual fitting #
####################
def test_fit_residuals_picks_the_generating_family(tmp_path: Path):
    residuals = tmp_path / "residuals.csv"
    pd.DataFrame({"residual": np.random.default_rng(0).normal(0.0, 1500.0, 5000)}).to_csv(residuals, index=False)
    result = invoke("-o", tmp_path, "fit-residuals", residuals, "-f", "normal", "-f", "uniform", "-f", "cauchy")
    assert result.exit_code == 0, result.stderr
    families = pd.read_csv(tmp_path / "families.csv")
    assert list(families["rank"]) == [1, 2, 3]
    assert families.loc[0, "family"] == "normal"
    assert families["sse"].is_monotonic_increasing
    document = json.loads((tmp_path / "distribution.json").read_text())
    assert document["distribution"]["family"] == "normal"
    assert document["distribution"]["params"][1] == pytest.approx(1500.0, rel=0.05)


def test_fit_residuals_input_errors(tmp_path: Path):
    residuals = tmp_path / "residuals.csv"
    pd.DataFrame({"residual": np.arange(20.0)}).to_csv(residuals, index=False)
    assert invoke("-o", tmp_path, "fit-residuals", residuals).exit_code == 1
    assert invoke("-o", tmp_path, "fit-residuals", residuals, "--column", "error").exit_code == 1
    assert invoke("-o", tmp_path, "fit-residuals", residuals, "-f", "zipf").exit_code == 2


##############
# Simulation #
##############
def test_zero_sd_matches_the_unperturbed_run(tmp_path: Path):
    base = invoke("-o", tmp_path, "simulate", "--scenario", TOY_SCENARIO, "-s", 0, "-s", 1)
    zero = invoke("-o", tmp_path, "simulate", "--scenario", TOY_SCENARIO, "-s", 0, "-s", 1, "--normal-sd", 0)
    assert base.exit_code == 0, base.stderr
    assert zero.exit_code == 0, zero.stderr
    runs = tmp_path / "simulation"
    for table in ("yearly_mix", "prices", "ledger"):
        assert (runs / "baseline" / f"{table}.csv").read_bytes() == (runs / "normal-0" / f"{table}.csv").read_bytes()
    mix = pd.read_csv(runs / "baseline" / "yearly_mix.csv")
    assert set(mix["seed"]) == {0, 1}
    assert set(mix["year"]) == {2018, 2019, 2020, 2021}


def test_simulate_with_a_fitted_distribution(tmp_path: Path):
    residuals = tmp_path / "residuals.csv"
    pd.DataFrame({"residual": np.random.default_rng(1).normal(0.0, 5.0, 2000)}).to_csv(residuals, index=False)
    assert invoke("-o", tmp_path, "fit-residuals", residuals, "-f", "normal").exit_code == 0
    result = invoke("-o", tmp_path, "simulate", "--scenario", TOY_SCENARIO, "-d", tmp_path / "distribution.json")
    assert result.exit_code == 0, result.stderr
    manifest = json.loads((tmp_path / "simulation" / "distribution" / "manifest.json").read_text())
    assert manifest["distribution"]["family"] == "normal"
    assert manifest["expected_abs_error"] == pytest.approx(5.0 * np.sqrt(2 / np.pi), rel=0.1)


def test_manifest_hash_follows_the_config(tmp_path: Path):
    def manifest(name: str, *args: Any) -> dict[str, Any]:  # noqa: ANN401
        result = invoke("-o", tmp_path, "simulate", "--scenario", TOY_SCENARIO, "--name", name, *args)
        assert result.exit_code == 0, result.stderr
        text = (tmp_path / "simulation" / name / "manifest.json").read_text()
        assert sum('"created"' in line for line in text.splitlines()) == 1
        return json.loads(text)

    first = manifest("first", "--normal-sd", 10)
    again = manifest("again", "--normal-sd", 10)
    other = manifest("other", "--normal-sd", 20)
    assert first["config_hash"] == again["config_hash"]
    assert first["config_hash"] != other["config_hash"]
    assert first["seeds"] == [0]


def test_simulate_rejects_two_perturbations(tmp_path: Path):
    distribution = tmp_path / "distribution.json"
    distribution.write_text("{}")
    result = invoke("-o", tmp_path, "simulate", "--scenario", TOY_SCENARIO, "-d", distribution, "--normal-sd", 5)
    assert result.exit_code == 2


def test_default_sweep_has_twenty_rows(tmp_path: Path):
    result = invoke("-o", tmp_path, "sensitivity", "--scenario", TOY_SCENARIO, "-s", 0)
    assert result.exit_code == 0, result.stderr
    table = pd.read_csv(tmp_path / "sensitivity.csv")
    assert len(table) == 20
    assert table["sd_mw"].tolist() == [1000.0 * k for k in range(1, 21)]
    assert (table["n_seeds"] == 1).all()


def test_sweep_control_and_jobs(tmp_path: Path):
    args = ("sensitivity", "--scenario", TOY_SCENARIO, "--sd-start", 10, "--sd-stop", 30, "--sd-step", 10, "--control")
    serial = invoke("-o", tmp_path / "serial", *args, "-s", 0, "-s", 1)
    parallel = invoke("-o", tmp_path / "parallel", "-j", 2, *args, "-s", 0, "-s", 1)
    assert serial.exit_code == 0, serial.stderr
    assert parallel.exit_code == 0, parallel.stderr
    table = pd.read_csv(tmp_path / "serial" / "sensitivity.csv")
    assert table["sd_mw"].tolist() == [0.0, 10.0, 20.0, 30.0]
    assert (tmp_path / "serial" / "sensitivity.csv").read_bytes() == (
        tmp_path / "parallel" / "sensitivity.csv"
    ).read_bytes()


def test_sweep_range_flags_go_together(tmp_path: Path):
    result = invoke("-o", tmp_path, "sensitivity", "--scenario", TOY_SCENARIO, "--sd-start", 10)
    assert result.exit_code == 2


###########
# Reports #
###########
def test_report_collects_long_tables(trained: Path):
    out = trained / "out"
    for args in (("--normal-sd", 0), ("--normal-sd", 20)):
        assert invoke("-o", out, "simulate", "--scenario", TOY_SCENARIO, *args).exit_code == 0
    sweep = ("sensitivity", "--scenario", TOY_SCENARIO, "--sd-start", 10, "--sd-stop", 20, "--sd-step", 10, "-s", 0)
    assert invoke("-o", out, *sweep).exit_code == 0

    result = invoke("-o", out, "report", "--html")
    assert result.exit_code == 0, result.stderr
    report = out / "report"
    metrics = pd.read_csv(report / "metric_by_algorithm.csv")
    assert list(metrics.columns) == ["algorithm", "metric", "value"]
    assert set(metrics["metric"]) >= {"mae", "rmse", "mse"}
    mix = pd.read_csv(report / "mix_by_mae.csv")
    assert list(mix.columns) == ["run", "mae", "technology", "dispatch_mwh"]
    assert mix["mae"].iloc[0] == 0
    assert set(mix["run"]) >= {"normal-0", "normal-20"}
    by_sd = pd.read_csv(report / "mix_by_sd.csv")
    assert set(by_sd["sd_mw"]) == {10.0, 20.0}
    assert "carbon_t" in set(by_sd["series"])
    for name in ("metric_by_algorithm", "mix_by_mae", "mix_by_sd"):
        assert (report / f"{name}.html").stat().st_size > 0


def test_report_needs_inputs(tmp_path: Path):
    result = invoke("-o", tmp_path, "report", tmp_path)
    assert result.exit_code == 1
