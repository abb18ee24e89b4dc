"""Forecast day-ahead electricity demand and measure how forecast error shapes a long-term electricity market."""

from __future__ import annotations

import logging
from contextlib import contextmanager
from datetime import datetime, timezone
from pathlib import Path
from typing import TYPE_CHECKING

import click
from pydantic import ValidationError
from rich.console import Console
from rich.logging import RichHandler

from forecast_impact import __copyright__, __version__
from forecast_impact.config import load_config, with_overrides
from forecast_impact.errors import ConfigError, ForecastImpactError


if TYPE_CHECKING:
    from collections.abc import Callable, Iterator


_version: str = f"forecast-impact v{__version__} -- {__copyright__}"

LOG_TIME_FORMAT = "[%Y-%m-%dT%H:%M:%S.%f%z]"
EXIT_RUNTIME = 1
EXIT_CONFIG = 2


def _describe(exc: ValidationError) -> str:
    return "; ".join(
        f"{'.'.join(str(part) for part in error['loc']) or '<root>'}: {error['msg']}" for error in exc.errors()
    )


@contextmanager
def reporting(ctx: click.Context) -> Iterator[None]:
    """Render errors raised by a command on stderr and exit 2 for configuration problems, 1 otherwise."""
    stderr: Console = ctx.obj["stderr"]
    try:
        yield
    except ValidationError as exc:
        stderr.log(f"[red bold]ERROR:[/red bold] invalid configuration: {_describe(exc)}")
        ctx.exit(EXIT_CONFIG)
    except ConfigError as exc:
        stderr.log(f"[red bold]ERROR:[/red bold] {exc}")
        ctx.exit(EXIT_CONFIG)
    except ForecastImpactError as exc:
        stderr.log(f"[red bold]ERROR:[/red bold] {type(exc).__name__}: {exc}")
        ctx.exit(EXIT_RUNTIME)
    except OSError as exc:
        stderr.log(f"[red bold]ERROR:[/red bold] {exc}")
        ctx.exit(EXIT_RUNTIME)
    except Exception:  # noqa: BLE001
        stderr.print_exception()
        stderr.log("[red bold]ERROR:[/red bold] Unknown exception")
        ctx.exit(EXIT_RUNTIME)


def summary(ctx: click.Context, text: str) -> None:
    """Print the one-line result of a command on stdout."""
    stdout: Console = ctx.obj["stdout"]
    stdout.print(text, soft_wrap=True, highlight=False, markup=False)


@click.group()
@click.option(
    "-c",
    "--config",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    default=None,
    help="YAML run configuration; flags override its values.",
)
@click.option(
    "-o",
    "--output",
    type=click.Path(file_okay=False, path_type=Path),
    default=None,
    help="Output directory (overrides output.directory).",
)
@click.option(
    "-j",
    "--jobs",
    type=click.IntRange(min=-1),
    default=1,
    show_default=True,
    help="Parallel workers for grid search, per-hour fits, family fits and sweeps (-1 for all cores).",
)
@click.option("-q", "--quiet", is_flag=True, default=False, help="Only log warnings and errors.")
@click.option("--verbose", is_flag=True, default=False, help="Log debug detail.")
@click.help_option("-h", "--help")
@click.version_option(__version__, "-v", "--version", message=_version)
@click.pass_context
def main(  # noqa: PLR0913
    ctx: click.Context,
    config: Path | None,
    output: Path | None,
    jobs: int = 1,
    quiet: bool = False,  # noqa: FBT001 FBT002
    verbose: bool = False,  # noqa: FBT001 FBT002
) -> None:
    """
    Forecast day-ahead electricity demand and measure how forecast error shapes a long-term electricity market.

    Run forecast-impact COMMAND --help for details on each command.
    """
    ctx.ensure_object(dict)

    get_datetime: Callable = lambda: datetime.now(timezone.utc).astimezone()  # noqa: E731
    ctx.obj["stdout"] = Console(
        log_time_format=LOG_TIME_FORMAT,
        get_datetime=get_datetime,
    )
    ctx.obj["stderr"] = Console(
        log_time_format=LOG_TIME_FORMAT,
        get_datetime=get_datetime,
        stderr=True,
    )

    handler = RichHandler(console=ctx.obj["stderr"], log_time_format=LOG_TIME_FORMAT, show_path=False)
    logger = logging.getLogger("forecast_impact")
    logger.handlers = [handler]
    logger.propagate = False
    logger.setLevel(logging.WARNING if quiet else logging.DEBUG if verbose else logging.INFO)

    with reporting(ctx):
        ctx.obj["config"] = with_overrides(load_config(config), {"output.directory": output})
    ctx.obj["jobs"] = jobs


if __name__ == "__main__":
    # Commands register on the imported module's group, not on this __main__ copy
    from forecast_impact.__main__ import main as cli

    cli(obj={})
