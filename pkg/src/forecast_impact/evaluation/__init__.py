"""Metrics, cross-validated grid search, per-hour pipelines and reserve analysis."""

from typing import Any

__all__ = []


def export(defn: Any) -> Any:  # noqa: ANN401
    """Module-level export decorator."""
    globals()[defn.__name__] = defn
    __all__.append(defn.__name__)  # noqa: PYI056
    return defn


from forecast_impact.evaluation.metrics import MetricReport, compute_metrics, persistence_baseline
from forecast_impact.evaluation.reserve import (
    DEFAULT_AVG_RESERVE,
    DEFAULT_MAX_RESERVE,
    ReserveReport,
    reserve_analysis,
)
from forecast_impact.evaluation.utils import fit_matrix, predict_matrix, training_targets
from forecast_impact.evaluation.progressive import ProgressiveResult, progressive_validation
from forecast_impact.evaluation.search import SEARCH_COLUMNS, cross_validate, cv_splits, grid_search
from forecast_impact.evaluation.orchestrate import HourlyRun, per_hour_orchestrate
from forecast_impact.evaluation.benchmark import DriftBenchmark, drift_benchmark
