"""How often forecast error stays within the tendered grid reserve."""

from __future__ import annotations

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from forecast_impact.errors import DataError
from forecast_impact.evaluation import export


DEFAULT_MAX_RESERVE = 6000.0
DEFAULT_AVG_RESERVE = 2000.0


@export
class ReserveReport(BaseModel):
    """Share of absolute residuals covered by each reserve level, with the 5th and 95th residual percentiles."""

    model_config = ConfigDict(frozen=True)

    frac_within_max: float = Field(ge=0, le=1)
    frac_within_avg: float = Field(ge=0, le=1)
    p5: float
    p95: float
    max_reserve: float
    avg_reserve: float
    n: int


@export
def reserve_analysis(
    residuals: np.ndarray,
    max_reserve: float = DEFAULT_MAX_RESERVE,
    avg_reserve: float = DEFAULT_AVG_RESERVE,
) -> ReserveReport:
    """Percentiles use linear interpolation between the closest ranks."""
    values = np.asarray(residuals, dtype=float).ravel()
    if not len(values):
        msg = "reserve analysis needs at least one residual"
        raise DataError(msg)
    magnitude = np.abs(values)
    p5, p95 = np.percentile(values, [5.0, 95.0], method="linear")
    return ReserveReport(
        frac_within_max=float(np.mean(magnitude <= max_reserve)),
        frac_within_avg=float(np.mean(magnitude <= avg_reserve)),
        p5=float(p5),
        p95=float(p95),
        max_reserve=max_reserve,
        avg_reserve=avg_reserve,
        n=len(values),
    )
