"""Short-run marginal costs and merit-order dispatch with uniform pricing."""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from forecast_impact.errors import MissingFuelPriceError
from forecast_impact.market import export


if TYPE_CHECKING:
    from forecast_impact.market.models import PowerPlantSpec, Scenario
    from forecast_impact.residuals import ResidualDistribution


log = logging.getLogger(__name__)

VOLL_MULTIPLE = 10.0


@export
def srmc(plant: PowerPlantSpec, fuel_price: float | None, carbon_price: float) -> float:
    """Cost of generating one more MWh: fuel / efficiency + carbon intensity * carbon price + variable opex."""
    cost = plant.carbon_intensity_t_per_mwh * carbon_price + plant.variable_opex_per_mwh
    if plant.fuel is None:
        return cost
    if fuel_price is None:
        msg = f"{plant.name or plant.technology.value} burns {plant.fuel} but has no fuel price"
        raise MissingFuelPriceError(msg)
    return fuel_price / plant.efficiency + cost


@export
@dataclass(frozen=True, eq=False)
class Dispatch:
    """Outcome of clearing every segment: MW per (segment, plant), price and unserved MW per segment."""

    dispatch: np.ndarray
    price: np.ndarray
    unserved: np.ndarray

    @property
    def served(self) -> np.ndarray:
        """Total MW dispatched per segment."""
        return self.dispatch.sum(axis=1)


@export
def dispatch_segments(
    costs: np.ndarray,
    available: np.ndarray,
    demand: np.ndarray,
    value_of_lost_load: float | None = None,
) -> Dispatch:
    """
    Clear several demand segments against one set of offers.

    ``costs`` holds one SRMC per plant and ``available`` the MW each plant offers in each segment,
    shaped (segments, plants). Plants are filled cheapest first, ties going to the lower plant
    index. The price is the SRMC of the last plant dispatched, or ``value_of_lost_load`` when
    demand is not met (10 times the highest SRMC if not given). A segment with nothing dispatched
    clears at 0.
    """
    costs = np.asarray(costs, dtype=float).ravel()
    demand = np.atleast_1d(np.asarray(demand, dtype=float))
    voll = VOLL_MULTIPLE * float(costs.max(initial=0.0)) if value_of_lost_load is None else value_of_lost_load
    n_segments, n_plants = len(demand), len(costs)
    if n_plants == 0:
        unserved = demand.copy()
        return Dispatch(np.zeros((n_segments, 0)), np.where(unserved > 0, voll, 0.0), unserved)
    available = np.asarray(available, dtype=float).reshape(-1, n_plants)
    available = np.broadcast_to(available, (n_segments, n_plants))

    order = np.lexsort((np.arange(n_plants), costs))
    offers = available[:, order]
    before = np.zeros_like(offers)
    before[:, 1:] = np.cumsum(offers[:, :-1], axis=1)
    filled = np.clip(demand[:, None] - before, 0.0, offers)

    running = filled > 0
    any_running = running.any(axis=1)
    marginal = n_plants - 1 - np.argmax(running[:, ::-1], axis=1)
    price = np.where(any_running, costs[order][marginal], 0.0)
    unserved = np.maximum(0.0, demand - offers.sum(axis=1))
    # Short segments clear at VoLL, not the marginal SRMC, so scarcity hours carry the revenue that NPV appraisal
    # and the GenCo ledger book; pricing them at SRMC would leave peakers with no margin to invest on.
    price = np.where(unserved > 0, voll, price)

    dispatch = np.empty_like(filled)
    dispatch[:, order] = filled
    return Dispatch(dispatch, price, unserved)


@export
def merit_order_dispatch(
    costs: Sequence[float] | np.ndarray,
    available: Sequence[float] | np.ndarray,
    demand: float,
    value_of_lost_load: float | None = None,
) -> tuple[np.ndarray, float, float]:
    """Single-segment dispatch: (MW per plant, clearing price, unserved MW)."""
    offers = np.asarray(available, dtype=float)[None, :]
    result = dispatch_segments(np.asarray(costs), offers, np.array([demand]), value_of_lost_load)
    return result.dispatch[0], float(result.price[0]), float(result.unserved[0])


@export
def perturb_demand(
    demand: np.ndarray,
    dist: ResidualDistribution,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Add one residual draw to each segment, flooring at zero; returns (perturbed demand, draws)."""
    demand = np.asarray(demand, dtype=float)
    draws = dist.sample(len(demand), rng)
    perturbed = np.maximum(0.0, demand + draws)
    log.debug(
        "Perturbed %d segments: mean draw %.1f MW, %d floored at zero",
        len(draws),
        draws.mean() if len(draws) else 0.0,
        np.sum(perturbed == 0),
    )
    return perturbed, draws


@export
def fleet_offers(
    plants: Sequence[PowerPlantSpec],
    scenario: Scenario,
    year: int,
    carbon_price: float,
) -> tuple[np.ndarray, np.ndarray]:
    """SRMC per plant and MW available per (segment, plant) in ``year``."""
    fuel_prices = {fuel: scenario.fuel_price(fuel, year) for fuel in {plant.fuel for plant in plants if plant.fuel}}
    profiles = {tech: scenario.availability(tech) for tech in {plant.technology for plant in plants}}
    costs = np.array([srmc(plant, fuel_prices.get(plant.fuel or ""), carbon_price) for plant in plants], dtype=float)
    available = np.zeros((scenario.n_segments, len(plants)))
    for i, plant in enumerate(plants):
        available[:, i] = plant.capacity_mw * profiles[plant.technology]
    return costs, available


@export
def value_of_lost_load(scenario: Scenario, costs: np.ndarray) -> float:
    """The scenario's value of lost load, or 10 times the highest SRMC on offer."""
    configured = scenario.economics.value_of_lost_load_per_mwh
    return VOLL_MULTIPLE * float(np.max(costs, initial=0.0)) if configured is None else configured
