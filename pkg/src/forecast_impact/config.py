"""Run configuration: a validated YAML file, flag overrides, named seed streams and the config hash."""

from __future__ import annotations

import hashlib
import json
import logging
from copy import deepcopy
from datetime import date
from pathlib import Path
from typing import TYPE_CHECKING, Any, Literal

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, FilePath, field_validator, model_validator

from forecast_impact.data import (
    DEFAULT_LAG_DAYS,
    DEFAULT_LAG_WINDOW,
    DEFAULT_SEASONS,
    DRIFT_SCENARIO,
    SeasonTable,
    SynthParams,
)
from forecast_impact.errors import ConfigError
from forecast_impact.evaluation import DEFAULT_AVG_RESERVE, DEFAULT_MAX_RESERVE
from forecast_impact.learners import REGRESSORS
from forecast_impact.market import SWEEP_SDS
from forecast_impact.residuals import FAMILY_NAMES


if TYPE_CHECKING:
    from collections.abc import Iterable, Mapping


log = logging.getLogger(__name__)

STREAMS = ("train", "residuals", "simulate")


class Section(BaseModel):
    """Config sections are immutable and reject unknown keys."""

    model_config = ConfigDict(frozen=True, extra="forbid")


class DataSection(Section):
    """Where demand comes from: a CSV file or the synthetic generator, never both."""

    path: FilePath | None = None
    synth: SynthParams | None = None
    holidays: FilePath | None = None
    timestamp_column: str = "timestamp"
    demand_column: str = "demand"
    timestamp_format: str | None = None
    seasons: SeasonTable = DEFAULT_SEASONS
    boundary: date = date(2018, 1, 1)

    @model_validator(mode="before")
    @classmethod
    def default_source(cls, data: Any) -> Any:  # noqa: ANN401
        if isinstance(data, dict) and data.get("path") is None and data.get("synth") is None:
            data = {**data, "synth": DRIFT_SCENARIO}
        return data

    @model_validator(mode="after")
    def one_source(self) -> DataSection:
        if self.path is not None and self.synth is not None:
            msg = "give either data.path or data.synth, not both"
            raise ValueError(msg)
        self.seasons.day_lookup()
        return self


class FeaturesSection(Section):
    """Lag layout and the target hours to model."""

    lag_days: tuple[int, ...] = DEFAULT_LAG_DAYS
    lag_window: int = Field(default=DEFAULT_LAG_WINDOW, ge=1)
    hours: tuple[int, ...] = tuple(range(24))

    @field_validator("hours")
    @classmethod
    def distinct_hours(cls, v: tuple[int, ...]) -> tuple[int, ...]:
        if not v or len(set(v)) != len(v) or not all(0 <= hour <= 23 for hour in v):  # noqa: PLR2004
            msg = "hours must be a non-empty list of distinct values within 0..23"
            raise ValueError(msg)
        return v

    @field_validator("lag_days")
    @classmethod
    def positive_lags(cls, v: tuple[int, ...]) -> tuple[int, ...]:
        if not v or min(v) < 1:
            msg = "lag_days must be a non-empty list of positive day offsets"
            raise ValueError(msg)
        return v


# The season flags sum to one, so least squares with an intercept is rank deficient on them.
DEFAULT_PARAMS: dict[str, dict[str, Any]] = {"ols": {"fit_intercept": False}, "ridge": {"lam": 1.0}}


class TrainSection(Section):
    """Algorithms to run, their fixed parameters or search grids, and the cross-validation layout."""

    algorithms: tuple[str, ...] = ("ols",)
    params: dict[str, dict[str, Any]] = Field(default_factory=lambda: deepcopy(DEFAULT_PARAMS))
    search: bool = False
    grids: dict[str, dict[str, list[Any]]] = Field(default_factory=dict)
    cv_mode: Literal["random", "time_ordered"] = "random"
    n_splits: int = Field(default=10, ge=2)
    search_hour: int = Field(default=12, ge=0, le=23)

    @field_validator("algorithms")
    @classmethod
    def known_algorithms(cls, v: tuple[str, ...]) -> tuple[str, ...]:
        if not v:
            msg = "at least one algorithm is required"
            raise ValueError(msg)
        unknown = [kind for kind in v if kind not in REGRESSORS]
        if unknown:
            msg = f"unknown algorithm(s) {', '.join(unknown)}; expected any of {', '.join(sorted(REGRESSORS))}"
            raise ValueError(msg)
        return tuple(dict.fromkeys(v))

    @field_validator("params", "grids")
    @classmethod
    def known_kinds(cls, v: dict[str, Any]) -> dict[str, Any]:
        unknown = [kind for kind in v if kind not in REGRESSORS]
        if unknown:
            msg = f"unknown algorithm(s) {', '.join(unknown)}"
            raise ValueError(msg)
        return v


class ResidualsSection(Section):
    """Families to compare and how residuals are binned."""

    families: tuple[str, ...] = FAMILY_NAMES
    bin_rule: Literal["freedman-diaconis"] = "freedman-diaconis"
    max_residuals: int | None = Field(default=None, ge=50)

    @field_validator("families")
    @classmethod
    def known_families(cls, v: tuple[str, ...]) -> tuple[str, ...]:
        unknown = [family for family in v if family not in FAMILY_NAMES]
        if not v or unknown:
            msg = f"families must be drawn from {', '.join(FAMILY_NAMES)}; got {', '.join(v) or 'none'}"
            raise ValueError(msg)
        return v


class SimulateSection(Section):
    """Scenario, perturbation source and seeds for market runs and the sensitivity sweep."""

    scenario: FilePath | None = None
    start_year: int | None = None
    end_year: int | None = None
    seeds: tuple[int, ...] = Field(default=(0,), min_length=1)
    distribution: FilePath | None = None
    normal_sd: float | None = Field(default=None, ge=0)
    sweep_sds: tuple[float, ...] = Field(default=SWEEP_SDS, min_length=1)
    sweep_seeds: tuple[int, ...] = Field(default=(0, 1, 2), min_length=1)
    control: bool = False
    max_reserve: float = Field(default=DEFAULT_MAX_RESERVE, gt=0)
    avg_reserve: float = Field(default=DEFAULT_AVG_RESERVE, gt=0)

    @model_validator(mode="after")
    def one_perturbation(self) -> SimulateSection:
        if self.distribution is not None and self.normal_sd is not None:
            msg = "give either simulate.distribution or simulate.normal_sd, not both"
            raise ValueError(msg)
        if min(self.sweep_sds) < 0:
            msg = "sweep_sds must be non-negative"
            raise ValueError(msg)
        return self


class OutputSection(Section):
    """Where tables go and how they are written."""

    directory: Path = Path("output")
    record_timings: bool = True
    float_format: str | None = None


class RunConfig(Section):
    """Complete configuration of a pipeline run."""

    seed: int = 0
    data: DataSection = DataSection()
    features: FeaturesSection = FeaturesSection()
    train: TrainSection = TrainSection()
    residuals: ResidualsSection = ResidualsSection()
    simulate: SimulateSection = SimulateSection()
    output: OutputSection = OutputSection()


def load_config(path: Path | None) -> RunConfig:
    """Read a YAML config file; no path gives the defaults."""
    if path is None:
        return RunConfig()
    try:
        with Path(path).open() as f:
            raw = yaml.safe_load(f)
    except OSError as exc:
        msg = f"cannot read config {path}: {exc}"
        raise ConfigError(msg) from exc
    except yaml.YAMLError as exc:
        msg = f"config {path} is not valid YAML: {exc}"
        raise ConfigError(msg) from exc
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        msg = f"config {path} must be a mapping"
        raise ConfigError(msg)
    config = RunConfig.model_validate(raw)
    log.debug("Loaded config from %s", path)
    return config


def with_overrides(config: RunConfig, overrides: Mapping[str, Any], clear: Iterable[str] = ()) -> RunConfig:
    """
    Return ``config`` with flag values written over it and revalidated.

    Keys are dotted paths such as ``simulate.normal_sd``. ``None`` values mean the flag was not given
    and are skipped; keys in ``clear`` are reset to ``None`` first.
    """
    merged = config.model_dump()
    updates = [(key, None) for key in clear] + [(key, value) for key, value in overrides.items() if value is not None]
    for dotted, value in updates:
        *parents, name = dotted.split(".")
        target = merged
        for parent in parents:
            target = target[parent]
        target[name] = value
    return RunConfig.model_validate(merged)


def stream_seed(seed: int, name: str) -> int:
    """Independent integer seed for one named random stream."""
    if name not in STREAMS:
        msg = f"unknown random stream {name!r}; expected one of {', '.join(STREAMS)}"
        raise ConfigError(msg)
    child = np.random.SeedSequence(seed).spawn(len(STREAMS))[STREAMS.index(name)]
    return int(child.generate_state(1)[0])


def config_hash(config: RunConfig) -> str:
    """SHA-256 of the config as canonical JSON."""
    canonical = json.dumps(config.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()
