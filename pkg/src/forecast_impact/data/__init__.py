"""Demand series ingest, calendar labelling and per-hour design matrices."""

from typing import Any

__all__ = []


def export(defn: Any) -> Any:  # noqa: ANN401
    """Module-level export decorator."""
    globals()[defn.__name__] = defn
    __all__.append(defn.__name__)  # noqa: PYI056
    return defn


from forecast_impact.data.models import (
    DEFAULT_SEASONS,
    DRIFT_BOUNDARY,
    DRIFT_SCENARIO,
    CalendarFeatures,
    DemandSeries,
    FeatureMatrix,
    MinMaxScaler,
    Season,
    SeasonTable,
    SynthParams,
)
from forecast_impact.data.ingest import ingest_demand_csv, load_holidays, synth_demand, write_demand_csv
from forecast_impact.data.calendar import calendar_records, label_calendar
from forecast_impact.data.features import (
    DEFAULT_LAG_DAYS,
    DEFAULT_LAG_WINDOW,
    apply_scaler,
    build_features,
    fit_scaler,
    fit_target_scaler,
    scale_split,
    split_train_test,
)
