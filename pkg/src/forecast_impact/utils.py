"""Plumbing shared by the commands: demand loading, table writing and run manifests."""

from __future__ import annotations

import json
import logging
from datetime import datetime, timezone
from pathlib import Path
from typing import TYPE_CHECKING, Any

from forecast_impact import __version__
from forecast_impact.config import config_hash
from forecast_impact.data import ingest_demand_csv, load_holidays, synth_demand
from forecast_impact.errors import ConfigError


if TYPE_CHECKING:
    import pandas as pd

    from forecast_impact.config import RunConfig
    from forecast_impact.data import DemandSeries


log = logging.getLogger(__name__)

TIMING_COLUMNS = ("fit_time", "score_time", "mean_fit_time", "mean_score_time")


def output_dir(config: RunConfig, *parts: str) -> Path:
    """The configured output directory (or a subdirectory of it), created on demand."""
    path = Path(config.output.directory, *parts)
    path.mkdir(parents=True, exist_ok=True)
    return path


def load_demand(config: RunConfig) -> DemandSeries:
    """Demand from the configured CSV file, or from the synthetic generator."""
    data = config.data
    holidays = load_holidays(data.holidays) if data.holidays is not None else frozenset()
    if data.path is not None:
        return ingest_demand_csv(
            data.path,
            timestamp_column=data.timestamp_column,
            demand_column=data.demand_column,
            timestamp_format=data.timestamp_format,
            holidays=holidays,
        )
    if data.synth is None:
        msg = "no demand source configured"
        raise ConfigError(msg)
    log.info("Generating %d synthetic days from seed %d", data.synth.n_days, data.synth.seed)
    return synth_demand(**data.synth.model_dump(), holidays=holidays)


def write_table(frame: pd.DataFrame, path: Path, config: RunConfig) -> Path:
    """Write a CSV table; timing columns are dropped unless timings are recorded."""
    if not config.output.record_timings:
        frame = frame.drop(columns=[column for column in TIMING_COLUMNS if column in frame.columns])
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=config.output.float_format, lineterminator="\n")
    log.debug("Wrote %d rows to %s", len(frame), path)
    return path


def write_manifest(path: Path, command: str, config: RunConfig, **fields: Any) -> Path:  # noqa: ANN401
    """Record what produced a set of outputs. Keys are sorted so the timestamp sits on its own line."""
    manifest = {
        "command": command,
        "version": __version__,
        "config_hash": config_hash(config),
        "seed": config.seed,
        "config": config.model_dump(mode="json"),
        "created": datetime.now(timezone.utc).isoformat(),
        **fields,
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")
    return path
