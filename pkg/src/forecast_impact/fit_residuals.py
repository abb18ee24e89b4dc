"""Fit candidate distributions to forecast residuals and keep the one with the lowest SSE."""

from __future__ import annotations

import json
import logging
from pathlib import Path

import click
import numpy as np
import pandas as pd

from forecast_impact.__main__ import main, reporting, summary
from forecast_impact.config import stream_seed, with_overrides
from forecast_impact.errors import MissingColumnError
from forecast_impact.residuals import ResidualDistribution, dump_distribution, rank_families
from forecast_impact.utils import output_dir, write_manifest, write_table


log = logging.getLogger(__name__)


def read_residuals(path: Path, column: str = "residual") -> np.ndarray:
    """The residual column of a residual table."""
    frame = pd.read_csv(path)
    if column not in frame.columns:
        msg = f"{path}: missing column {column}; found {', '.join(frame.columns)}"
        raise MissingColumnError(msg)
    return frame[column].to_numpy(dtype=float)


def family_table(fits: list[ResidualDistribution]) -> pd.DataFrame:
    """One row per fitted family, best first."""
    return pd.DataFrame(
        [
            {
                "rank": rank,
                "family": fit.family,
                "sse": fit.sse,
                "n_params": len(fit.params),
                "params": json.dumps(dict(zip(fit.param_names, fit.params))),
                "converged": fit.converged,
                "n_bins": fit.n_bins,
            }
            for rank, fit in enumerate(fits, start=1)
        ],
    )


@main.command()  # type: ignore[has-type]
@click.argument("file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option(
    "-f",
    "--family",
    "families",
    multiple=True,
    help="Family to fit; repeat for several [default: residuals.families].",
)
@click.option("--column", default="residual", show_default=True, help="Residual column in FILE.")
@click.help_option("-h", "--help")
@click.pass_context
def fit_residuals(ctx: click.Context, file: Path, families: tuple[str, ...], column: str) -> None:
    """Rank distribution families by SSE against the residuals in FILE and save the best fit."""
    with reporting(ctx):
        config = with_overrides(ctx.obj["config"], {"residuals.families": families or None})
        residuals = read_residuals(file, column)
        limit = config.residuals.max_residuals
        if limit is not None and len(residuals) > limit:
            rng = np.random.default_rng(stream_seed(config.seed, "residuals"))
            residuals = np.sort(rng.choice(residuals, size=limit, replace=False))
            log.info("Fitting a seeded subsample of %d residuals", limit)

        fits = rank_families(residuals, config.residuals.families, ctx.obj["jobs"])
        for fit in fits:
            if not fit.converged:
                log.warning("%s fit did not converge", fit.family)
        best = fits[0]

        directory = output_dir(config)
        write_table(family_table(fits), directory / "families.csv", config)
        dump_distribution(best, directory / "distribution.json")
        write_manifest(
            directory / "manifest-fit-residuals.json",
            "fit-residuals",
            config,
            residuals=str(file),
            family=best.family,
        )
        summary(
            ctx,
            f"Best of {len(fits)} families for {len(residuals)} residuals: {best.family} "
            f"(SSE {best.sse:.4g}); saved to {directory / 'distribution.json'}",
        )
