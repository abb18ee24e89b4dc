"""Run the market simulation under perturbed demand, alone or as a sweep over error sizes."""

from __future__ import annotations

import logging
import math
from pathlib import Path
from typing import TYPE_CHECKING

import click
import numpy as np
import pandas as pd

from forecast_impact.__main__ import main, reporting, summary
from forecast_impact.config import stream_seed, with_overrides
from forecast_impact.market import Scenario, default_scenario, load_scenario, run_simulation, sensitivity_sweep
from forecast_impact.residuals import ResidualDistribution, load_distribution
from forecast_impact.residuals.models import POINT_MASS
from forecast_impact.utils import output_dir, write_manifest, write_table


if TYPE_CHECKING:
    from forecast_impact.config import RunConfig


log = logging.getLogger(__name__)


def scenario_for(config: RunConfig) -> Scenario:
    """The configured scenario (or the shipped default) with any year overrides applied."""
    section = config.simulate
    scenario = load_scenario(section.scenario) if section.scenario is not None else default_scenario()
    years = {
        name: value
        for name, value in {"start_year": section.start_year, "end_year": section.end_year}.items()
        if value is not None
    }
    if years:
        scenario = Scenario.model_validate(scenario.model_dump() | years)
    return scenario


def perturbation(config: RunConfig) -> tuple[str, ResidualDistribution | None]:
    """Name and distribution of the demand error: a fitted file, Normal(0, sd), or none."""
    section = config.simulate
    if section.distribution is not None:
        return Path(section.distribution).stem, load_distribution(section.distribution)
    if section.normal_sd is not None:
        return f"normal-{section.normal_sd:g}", ResidualDistribution.normal(0.0, section.normal_sd)
    return "baseline", None


def expected_abs_error(dist: ResidualDistribution | None) -> float | None:
    """Mean absolute demand error the distribution stands for, when it is known."""
    if dist is None:
        return 0.0
    if dist.mae is not None:
        return dist.mae
    if dist.family == POINT_MASS:
        return abs(dist.params[0])
    if dist.family == "normal" and dist.params[0] == 0:
        return dist.params[1] * math.sqrt(2.0 / math.pi)
    return None


@main.command()  # type: ignore[has-type]
@click.option(
    "--scenario",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    default=None,
    help="Scenario YAML [default: the shipped scenario].",
)
@click.option(
    "-d",
    "--distribution",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    default=None,
    help="Residual distribution written by fit-residuals.",
)
@click.option("--normal-sd", type=click.FloatRange(min=0), default=None, help="Use Normal(0, SD) errors in MW instead.")
@click.option("-s", "--seed", "seeds", type=int, multiple=True, help="Run seed; repeat for several [default: 0].")
@click.option("--start-year", type=int, default=None, help="First simulated year.")
@click.option("--end-year", type=int, default=None, help="Last simulated year.")
@click.option("--name", default=None, help="Run directory name [default: derived from the perturbation].")
@click.help_option("-h", "--help")
@click.pass_context
def simulate(  # noqa: PLR0913
    ctx: click.Context,
    scenario: Path | None,
    distribution: Path | None,
    normal_sd: float | None,
    seeds: tuple[int, ...],
    start_year: int | None,
    end_year: int | None,
    name: str | None,
) -> None:
    """Simulate the market year by year with demand perturbed by forecast errors."""
    clear = []
    if distribution is not None:
        clear.append("simulate.normal_sd")
    if normal_sd is not None:
        clear.append("simulate.distribution")
    with reporting(ctx):
        config = with_overrides(
            ctx.obj["config"],
            {
                "simulate.scenario": scenario,
                "simulate.distribution": distribution,
                "simulate.normal_sd": normal_sd,
                "simulate.seeds": seeds or None,
                "simulate.start_year": start_year,
                "simulate.end_year": end_year,
            },
            clear=clear,
        )
        market = scenario_for(config)
        label, dist = perturbation(config)
        label = name or label

        tables: dict[str, list[pd.DataFrame]] = {}
        results = []
        for seed in config.simulate.seeds:
            result = run_simulation(market, dist, stream_seed(seed, "simulate"))
            results.append(result)
            for table, frame in result.tables().items():
                tables.setdefault(table, []).append(frame.assign(seed=seed))

        directory = output_dir(config, "simulation", label)
        for table, frames in tables.items():
            write_table(pd.concat(frames, ignore_index=True), directory / f"{table}.csv", config)
        write_manifest(
            directory / "manifest.json",
            "simulate",
            config,
            scenario=market.name,
            seeds=list(config.simulate.seeds),
            distribution=dist.model_dump(mode="json") if dist is not None else None,
            expected_abs_error=expected_abs_error(dist),
        )
        carbon = float(np.mean([result.mean_carbon_t for result in results]))
        invested = sum(sum(result.invested_mw.values()) for result in results) / len(results)
        summary(
            ctx,
            f"Simulated {market.start_year}-{market.end_year} over {len(results)} seed(s) ({label}): "
            f"{carbon:,.0f} t CO2 per year, {invested:,.0f} MW invested; tables in {directory}",
        )


def sweep_sds(start: float | None, stop: float | None, step: float | None) -> tuple[float, ...] | None:
    """The sd grid from the range flags, or ``None`` when none were given."""
    if start is None and stop is None and step is None:
        return None
    if start is None or stop is None or step is None:
        msg = "--sd-start, --sd-stop and --sd-step go together"
        raise click.UsageError(msg)
    if step <= 0 or stop < start:
        msg = "the sd range needs a positive step and stop >= start"
        raise click.UsageError(msg)
    return tuple(float(sd) for sd in np.arange(start, stop + step / 2, step))


@main.command()  # type: ignore[has-type]
@click.option(
    "--scenario",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    default=None,
    help="Scenario YAML [default: the shipped scenario].",
)
@click.option("--sd-start", type=click.FloatRange(min=0), default=None, help="First sd in MW [default: 1000].")
@click.option("--sd-stop", type=click.FloatRange(min=0), default=None, help="Last sd in MW [default: 20000].")
@click.option("--sd-step", type=float, default=None, help="sd increment in MW [default: 1000].")
@click.option("-s", "--seed", "seeds", type=int, multiple=True, help="Run seed; repeat for several [default: 0 1 2].")
@click.option("--control/--no-control", default=None, help="Add an sd = 0 row matching the unperturbed run.")
@click.option("--start-year", type=int, default=None, help="First simulated year.")
@click.option("--end-year", type=int, default=None, help="Last simulated year.")
@click.help_option("-h", "--help")
@click.pass_context
def sensitivity(  # noqa: PLR0913
    ctx: click.Context,
    scenario: Path | None,
    sd_start: float | None,
    sd_stop: float | None,
    sd_step: float | None,
    seeds: tuple[int, ...],
    control: bool | None,  # noqa: FBT001
    start_year: int | None,
    end_year: int | None,
) -> None:
    """Mean yearly energy per technology as the sd of Normal demand errors grows."""
    sds = sweep_sds(sd_start, sd_stop, sd_step)
    with reporting(ctx):
        config = with_overrides(
            ctx.obj["config"],
            {
                "simulate.scenario": scenario,
                "simulate.sweep_sds": sds,
                "simulate.sweep_seeds": seeds or None,
                "simulate.control": control,
                "simulate.start_year": start_year,
                "simulate.end_year": end_year,
            },
        )
        market = scenario_for(config)
        section = config.simulate
        table = sensitivity_sweep(
            market,
            section.sweep_sds,
            [stream_seed(seed, "simulate") for seed in section.sweep_seeds],
            control=section.control,
            jobs=ctx.obj["jobs"],
        )

        directory = output_dir(config)
        path = write_table(table, directory / "sensitivity.csv", config)
        write_manifest(
            directory / "manifest-sensitivity.json",
            "sensitivity",
            config,
            scenario=market.name,
            seeds=list(section.sweep_seeds),
        )
        summary(ctx, f"Swept {len(table)} sd value(s) over {len(section.sweep_seeds)} seed(s); table in {path}")
