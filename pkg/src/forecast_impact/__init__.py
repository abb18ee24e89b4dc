"""Forecast day-ahead electricity demand and measure how forecast error shapes a long-term electricity market."""

from typing import Any

__all__ = []


def export(defn: Any) -> Any:  # noqa: ANN401
    """Module-level export decorator."""
    globals()[defn.__name__] = defn
    __all__.append(defn.__name__)  # noqa: PYI056
    return defn


__copyright__ = "Copyright (c) 2024 Ryan Kozak"
from forecast_impact._version import __version__
from forecast_impact import data, evaluation, learners, market, residuals
from forecast_impact.ingest import ingest, synth
from forecast_impact.train import evaluate, train
from forecast_impact.fit_residuals import fit_residuals
from forecast_impact.simulate import sensitivity, simulate
from forecast_impact.report import report
