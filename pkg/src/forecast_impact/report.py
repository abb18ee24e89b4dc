"""Plot-ready long-format tables, and optional figures, from the outputs of earlier commands."""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import TYPE_CHECKING

import click
import pandas as pd
from plotly.graph_objects import Bar, Figure, Scatter

from forecast_impact.__main__ import main, reporting, summary
from forecast_impact.market import Technology
from forecast_impact.utils import write_table


if TYPE_CHECKING:
    from forecast_impact.config import RunConfig


log = logging.getLogger(__name__)

METRICS = ("mae", "rmse", "mse", "r_squared", "mase", "fit_time", "score_time")


class COLORS:
    """Plotly colour theme."""

    FORESTGREEN: str = "rgb(34, 139, 34)"
    ROYALBLUE: str = "rgb(65, 105, 225)"
    DARKORCHID: str = "rgb(153, 50, 204)"
    CRIMSON: str = "rgb(220, 20, 60)"
    DARKORANGE: str = "rgb(255, 140, 0)"
    GOLDENROD: str = "rgb(218, 165, 32)"
    SLATEGRAY: str = "rgb(112, 128, 144)"
    TEAL: str = "rgb(0, 128, 128)"


TECHNOLOGY_COLORS = {
    Technology.CCGT.value: COLORS.DARKORANGE,
    Technology.COAL.value: COLORS.SLATEGRAY,
    Technology.NUCLEAR.value: COLORS.DARKORCHID,
    Technology.ONSHORE_WIND.value: COLORS.FORESTGREEN,
    Technology.OFFSHORE_WIND.value: COLORS.TEAL,
    Technology.PHOTOVOLTAIC.value: COLORS.GOLDENROD,
    Technology.RECIP_GAS.value: COLORS.CRIMSON,
}


def metric_by_algorithm(metrics: pd.DataFrame) -> pd.DataFrame:
    """One row per (algorithm, metric)."""
    present = [metric for metric in METRICS if metric in metrics.columns]
    return metrics.melt(id_vars=["algorithm"], value_vars=present, var_name="metric", value_name="value")


def mix_by_mae(runs: Path) -> pd.DataFrame:
    """Mean yearly energy per technology for every simulation run, against the run's mean absolute error."""
    rows = []
    for manifest_path in sorted(runs.glob("*/manifest.json")):
        manifest = json.loads(manifest_path.read_text())
        mix = pd.read_csv(manifest_path.parent / "yearly_mix.csv")
        means = mix.groupby("technology", sort=False)["dispatch_mwh"].mean()
        rows.extend(
            {
                "run": manifest_path.parent.name,
                "mae": manifest.get("expected_abs_error"),
                "technology": technology,
                "dispatch_mwh": float(mwh),
            }
            for technology, mwh in means.items()
        )
    table = pd.DataFrame(rows, columns=["run", "mae", "technology", "dispatch_mwh"])
    return table.sort_values(["mae", "run", "technology"], kind="stable", na_position="last").reset_index(drop=True)


def mix_by_sd(sweep: pd.DataFrame) -> pd.DataFrame:
    """One row per (sd, series) with the mean and spread across seeds; series are technologies and carbon_t."""
    series = [column.removesuffix("_mean") for column in sweep.columns if column.endswith("_mean")]
    rows = [
        {"sd_mw": row["sd_mw"], "series": name, "mean": row[f"{name}_mean"], "sd": row[f"{name}_sd"]}
        for _, row in sweep.iterrows()
        for name in series
    ]
    return pd.DataFrame(rows, columns=["sd_mw", "series", "mean", "sd"])


def metric_figure(table: pd.DataFrame) -> Figure:
    """MAE by algorithm, best first."""
    mae = table[table["metric"] == "mae"].sort_values("value")
    return Figure(
        data=[Bar(x=mae["algorithm"], y=mae["value"], marker_color=COLORS.ROYALBLUE, name="MAE (MWh)")],
        layout=dict(title="Forecast error by algorithm", yaxis=dict(title_text="MAE (MWh)"), showlegend=False),
    )


def mix_figure(  # noqa: PLR0913
    table: pd.DataFrame,
    x: str,
    key: str,
    value: str,
    title: str,
    x_title: str,
    error: str | None = None,
) -> Figure:
    """One line per technology; ``error`` names an optional error-bar column."""
    data = []
    for technology, color in TECHNOLOGY_COLORS.items():
        rows = table[table[key] == technology]
        if rows.empty:
            continue
        trace = dict(x=rows[x], y=rows[value], line_color=color, hovertemplate=None, name=technology)
        if error is not None:
            trace["error_y"] = dict(type="data", array=rows[error], visible=True)
        data.append(Scatter(**trace))
    return Figure(
        data=data,
        layout=dict(
            title=title,
            hovermode="x",
            showlegend=True,
            xaxis=dict(title_text=x_title),
            yaxis=dict(title_text="Mean yearly energy (MWh)"),
        ),
    )


def build_report(run_dir: Path, config: RunConfig, *, html: bool = False) -> list[Path]:
    """Write every table (and figure) whose inputs exist under ``run_dir``; returns the files written."""
    target = run_dir / "report"
    written = []

    metrics_path = run_dir / "metrics.csv"
    if metrics_path.exists():
        table = metric_by_algorithm(pd.read_csv(metrics_path))
        written.append(write_table(table, target / "metric_by_algorithm.csv", config))
        if html:
            written.append(_html(metric_figure(table), target / "metric_by_algorithm.html"))

    runs = run_dir / "simulation"
    if runs.is_dir() and any(runs.glob("*/manifest.json")):
        table = mix_by_mae(runs)
        written.append(write_table(table, target / "mix_by_mae.csv", config))
        if html:
            figure = mix_figure(
                table, "mae", "technology", "dispatch_mwh", "Generation mix by forecast error", "MAE (MWh)"
            )
            written.append(_html(figure, target / "mix_by_mae.html"))

    sweep_path = run_dir / "sensitivity.csv"
    if sweep_path.exists():
        table = mix_by_sd(pd.read_csv(sweep_path))
        written.append(write_table(table, target / "mix_by_sd.csv", config))
        if html:
            figure = mix_figure(
                table, "sd_mw", "series", "mean", "Generation mix by demand error", "sd (MW)", error="sd"
            )
            written.append(_html(figure, target / "mix_by_sd.html"))

    if not written:
        msg = f"{run_dir} holds no metrics.csv, simulation runs or sensitivity.csv to report on"
        raise FileNotFoundError(msg)
    return written


def _html(figure: Figure, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    figure.write_html(path, include_plotlyjs="cdn")
    log.debug("Wrote figure %s", path)
    return path


@main.command()  # type: ignore[has-type]
@click.argument("run_dir", type=click.Path(exists=True, file_okay=False, path_type=Path), required=False)
@click.option("--html", is_flag=True, default=False, help="Also render plotly figures as HTML.")
@click.help_option("-h", "--help")
@click.pass_context
def report(ctx: click.Context, run_dir: Path | None, html: bool) -> None:  # noqa: FBT001
    """Collect metric, mix-vs-error and mix-vs-sd tables from RUN_DIR [default: the output directory]."""
    with reporting(ctx):
        config = ctx.obj["config"]
        run_dir = run_dir or config.output.directory
        written = build_report(run_dir, config, html=html)
        summary(ctx, f"Wrote {len(written)} report file(s) to {run_dir / 'report'}")
