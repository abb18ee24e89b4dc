"""Discounting, carbon price expectations and the NPV of a candidate plant."""

from __future__ import annotations

import logging
from collections.abc import Iterable, Mapping, Sequence
from typing import TYPE_CHECKING

import numpy as np
import numpy_financial as npf

from forecast_impact.errors import ConfigError, DegenerateHistoryError
from forecast_impact.market import export
from forecast_impact.market.dispatch import dispatch_segments, fleet_offers, srmc, value_of_lost_load


if TYPE_CHECKING:
    from forecast_impact.market.models import PowerPlantSpec, Scenario


log = logging.getLogger(__name__)


@export
def npv(cashflows: Sequence[float] | np.ndarray, rate: float) -> float:
    """Sum of ``cashflows[t] / (1 + rate) ** t``, with the first cashflow undiscounted."""
    if rate <= -1:
        msg = f"discount rate must exceed -1, got {rate}"
        raise ConfigError(msg)
    if not len(cashflows):
        return 0.0
    return float(npf.npv(rate, np.asarray(cashflows, dtype=float)))


@export
def forecast_carbon_price(
    history: Mapping[int, float] | Iterable[tuple[int, float]],
    years: Iterable[int] | int,
) -> np.ndarray:
    """Ordinary least squares line through (year, price), extrapolated to ``years`` and floored at 0."""
    points = list(history.items()) if isinstance(history, Mapping) else list(history)
    if len(points) < 2:  # noqa: PLR2004
        msg = f"need at least two carbon prices to fit a trend, got {len(points)}"
        raise DegenerateHistoryError(msg)
    x = np.array([year for year, _ in points], dtype=float)
    y = np.array([price for _, price in points], dtype=float)
    if np.ptp(x) == 0:
        msg = f"every carbon price is from {int(x[0])}; a trend needs more than one year"
        raise DegenerateHistoryError(msg)

    centre = x.mean()
    slope, intercept = np.polyfit(x - centre, y, 1)
    target = np.atleast_1d(np.asarray(years, dtype=float))
    return np.maximum(0.0, intercept + slope * (target - centre))


def _dispatch_margin(
    candidate: PowerPlantSpec,
    fleet: Sequence[PowerPlantSpec],
    scenario: Scenario,
    year: int,
    carbon_price: float,
) -> float:
    """Candidate's operating margin in one forward year, bidding last among equal-cost plants."""
    plants = [*(plant for plant in fleet if plant.operating(year)), candidate]
    costs, available = fleet_offers(plants, scenario, year, carbon_price)
    outcome = dispatch_segments(costs, available, scenario.segment_demand(year), value_of_lost_load(scenario, costs))
    own_cost = costs[-1]
    energy_margin = np.maximum(outcome.price - own_cost, 0.0) * outcome.dispatch[:, -1]
    return float(scenario.segment_hours() @ energy_margin) - candidate.fixed_opex_per_mw_year * candidate.capacity_mw


def _reference_margin(candidate: PowerPlantSpec, scenario: Scenario, year: int, carbon_price: float) -> float:
    """Margin at the final reference price, running whenever available."""
    fuel_price = scenario.fuel_price(candidate.fuel, year) if candidate.fuel else None
    unit_margin = max(scenario.final_reference_price - srmc(candidate, fuel_price, carbon_price), 0.0)
    energy = candidate.capacity_mw * float(scenario.segment_hours() @ scenario.availability(candidate.technology))
    return unit_margin * energy - candidate.fixed_opex_per_mw_year * candidate.capacity_mw


@export
def candidate_cashflows(
    candidate: PowerPlantSpec,
    scenario: Scenario,
    year: int,
    fleet: Sequence[PowerPlantSpec],
    horizon: int | None = None,
) -> np.ndarray:
    """
    Yearly cashflows of building ``candidate`` in ``year``, one per year of its lifetime plus year 0.

    Year 0 pays the capex. The first ``horizon`` operating years dispatch the candidate against
    ``fleet`` as it stands (plants retire but nobody else builds), with scenario demand growth and
    fuel curves and carbon prices extrapolated from the history known in ``year``. Later years
    earn the final reference price whenever the candidate is available.
    """
    horizon = scenario.economics.forward_horizon_years if horizon is None else horizon
    lifetime = candidate.lifetime_years
    years = np.arange(year + 1, year + lifetime + 1)
    carbon = forecast_carbon_price(scenario.carbon_history(year), years)

    flows = np.empty(lifetime + 1)
    flows[0] = -candidate.total_capex
    for t, (future, carbon_price) in enumerate(zip(years.tolist(), carbon.tolist()), start=1):
        if t <= horizon:
            flows[t] = _dispatch_margin(candidate, fleet, scenario, future, carbon_price)
        else:
            flows[t] = _reference_margin(candidate, scenario, future, carbon_price)
    return flows


@export
def expected_plant_npv(  # noqa: PLR0913
    candidate: PowerPlantSpec,
    scenario: Scenario,
    year: int,
    discount_rate: float,
    fleet: Sequence[PowerPlantSpec] = (),
    horizon: int | None = None,
) -> float:
    """NPV of building ``candidate`` in ``year`` at ``discount_rate``."""
    value = npv(candidate_cashflows(candidate, scenario, year, fleet, horizon), discount_rate)
    log.debug("%s in %d: NPV %.4g at %.3g", candidate.name or candidate.technology.value, year, value, discount_rate)
    return value
