"""Normalise a demand file, or generate a synthetic one, into the canonical two-column CSV."""

from __future__ import annotations

from datetime import date, datetime
from pathlib import Path
from typing import TYPE_CHECKING, Any

import click

from forecast_impact.__main__ import main, reporting, summary
from forecast_impact.config import with_overrides
from forecast_impact.data import DRIFT_SCENARIO, write_demand_csv
from forecast_impact.utils import load_demand, output_dir


if TYPE_CHECKING:
    from forecast_impact.data import DemandSeries


def _written(ctx: click.Context, series: DemandSeries, path: Path) -> None:
    write_demand_csv(series, path)
    summary(ctx, f"Wrote {len(series)} hourly observations ({series.start} to {series.end}) to {path}")


@main.command()  # type: ignore[has-type]
@click.argument("file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--timestamp-column", default=None, help="Timestamp column name [default: timestamp].")
@click.option("--demand-column", default=None, help="Demand column name [default: demand].")
@click.option("--timestamp-format", default=None, help="strptime format of the timestamps [default: ISO-8601].")
@click.option(
    "--holidays",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    default=None,
    help="Holiday list, one ISO-8601 date per line.",
)
@click.option(
    "-t",
    "--to",
    "target",
    type=click.Path(dir_okay=False, path_type=Path),
    default=None,
    help="Output file [default: OUTPUT/demand.csv].",
)
@click.help_option("-h", "--help")
@click.pass_context
def ingest(  # noqa: PLR0913
    ctx: click.Context,
    file: Path,
    timestamp_column: str | None,
    demand_column: str | None,
    timestamp_format: str | None,
    holidays: Path | None,
    target: Path | None,
) -> None:
    """Validate an hourly demand FILE and write it back as sorted (timestamp, demand) rows."""
    with reporting(ctx):
        config = with_overrides(
            ctx.obj["config"],
            {
                "data.path": file,
                "data.timestamp_column": timestamp_column,
                "data.demand_column": demand_column,
                "data.timestamp_format": timestamp_format,
                "data.holidays": holidays,
            },
            clear=("data.synth",),
        )
        series = load_demand(config)
        _written(ctx, series, target or output_dir(config) / "demand.csv")


@main.command()  # type: ignore[has-type]
@click.option("--start", type=click.DateTime(formats=["%Y-%m-%d"]), default=None, help="First day.")
@click.option("--days", "n_days", type=click.IntRange(min=1), default=None, help="Number of days.")
@click.option("--base", type=float, default=None, help="Mean level (MWh).")
@click.option("--daily-amp", type=click.FloatRange(min=0), default=None, help="Daily swing (MWh).")
@click.option("--weekly-amp", type=click.FloatRange(min=0), default=None, help="Weekend and holiday dip (MWh).")
@click.option("--seasonal-amp", type=click.FloatRange(min=0), default=None, help="Annual swing (MWh).")
@click.option("--noise-sd", type=click.FloatRange(min=0), default=None, help="Gaussian noise (MWh).")
@click.option("--drift", "drift_per_year", type=float, default=None, help="Linear drift (MWh per year).")
@click.option("--seed", type=int, default=None, help="Noise seed.")
@click.option(
    "--drift-scenario",
    is_flag=True,
    default=False,
    help="Start from the shipped drifting three-year series instead of the configured parameters.",
)
@click.option(
    "-t",
    "--to",
    "target",
    type=click.Path(dir_okay=False, path_type=Path),
    default=None,
    help="Output file [default: OUTPUT/demand.csv].",
)
@click.help_option("-h", "--help")
@click.pass_context
def synth(
    ctx: click.Context,
    start: datetime | None,
    target: Path | None,
    drift_scenario: bool,  # noqa: FBT001
    **params: Any,  # noqa: ANN401
) -> None:
    """Generate a seeded synthetic hourly demand series; flags override data.synth in the config."""
    with reporting(ctx):
        config = ctx.obj["config"]
        base = DRIFT_SCENARIO if drift_scenario or config.data.synth is None else config.data.synth
        day: date | None = start.date() if start is not None else None
        overrides = {f"data.synth.{name}": value for name, value in {**params, "start": day}.items()}
        config = with_overrides(config, {"data.synth": base.model_dump(), **overrides}, clear=("data.path",))
        series = load_demand(config)
        _written(ctx, series, target or output_dir(config) / "demand.csv")
