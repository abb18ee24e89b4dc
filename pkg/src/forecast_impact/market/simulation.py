"""Yearly market simulation, GenCo investment and demand-error sweeps."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from pydantic import BaseModel, ConfigDict

from forecast_impact.errors import ConfigError, MarketError
from forecast_impact.market import export
from forecast_impact.market.dispatch import dispatch_segments, fleet_offers, perturb_demand, value_of_lost_load
from forecast_impact.market.finance import candidate_cashflows, npv
from forecast_impact.market.models import Technology
from forecast_impact.residuals import ResidualDistribution


if TYPE_CHECKING:
    from collections.abc import Iterable, Sequence

    from forecast_impact.market.models import GenCo, PowerPlantSpec, Scenario


log = logging.getLogger(__name__)

SWEEP_SDS: tuple[float, ...] = tuple(float(sd) for sd in range(1000, 20001, 1000))


@export
class Investment(BaseModel):
    """One plant ordered by one GenCo."""

    model_config = ConfigDict(frozen=True)

    year: int
    genco: str
    technology: Technology
    capacity_mw: float
    capex: float
    npv: float
    commission_year: int


@export
class LedgerEntry(BaseModel):
    """One GenCo's money in one year."""

    model_config = ConfigDict(frozen=True)

    year: int
    genco: str
    cash_start: float
    revenue: float
    fuel: float
    carbon: float
    opex: float
    capex: float
    cash_end: float

    @property
    def profit(self) -> float:
        """Revenue less running costs, before capex."""
        return self.revenue - self.fuel - self.carbon - self.opex


@export
@dataclass(frozen=True, eq=False)
class YearRecord:
    """Market outcome of one simulated year."""

    year: int
    dispatch_mwh: dict[Technology, float]
    capacity_mw: dict[Technology, float]
    prices: np.ndarray
    unserved_mwh: float
    carbon_t: float
    carbon_price: float
    mean_draw_mw: float
    retirements_mw: dict[Technology, float]
    investments: tuple[Investment, ...] = ()


@export
@dataclass(frozen=True, eq=False)
class SimulationResult:
    """Every year of one simulation run plus the GenCo ledger."""

    scenario: str
    seed: int
    distribution: str | None
    years: tuple[YearRecord, ...]
    ledger: tuple[LedgerEntry, ...] = field(default=())

    @property
    def investments(self) -> list[Investment]:
        """Investments in the order they were made."""
        return [investment for record in self.years for investment in record.investments]

    @property
    def mean_dispatch_mwh(self) -> dict[Technology, float]:
        """Mean yearly energy contributed by each technology."""
        return {tech: float(np.mean([record.dispatch_mwh[tech] for record in self.years])) for tech in Technology}

    @property
    def invested_mw(self) -> dict[Technology, float]:
        """Total capacity ordered per technology."""
        totals = dict.fromkeys(Technology, 0.0)
        for investment in self.investments:
            totals[investment.technology] += investment.capacity_mw
        return totals

    @property
    def mean_carbon_t(self) -> float:
        """Mean yearly emissions."""
        return float(np.mean([record.carbon_t for record in self.years]))

    def tables(self) -> dict[str, pd.DataFrame]:
        """Long-format tables: yearly_mix, investments, prices, carbon and ledger."""
        mix = pd.DataFrame(
            [
                {
                    "year": record.year,
                    "technology": tech.value,
                    "dispatch_mwh": record.dispatch_mwh[tech],
                    "capacity_mw": record.capacity_mw[tech],
                    "retired_mw": record.retirements_mw[tech],
                }
                for record in self.years
                for tech in Technology
            ],
        )
        investments = pd.DataFrame(
            [investment.model_dump(mode="json") for investment in self.investments],
            columns=list(Investment.model_fields),
        )
        prices = pd.DataFrame(
            [
                {"year": record.year, "segment": segment, "price_per_mwh": float(price)}
                for record in self.years
                for segment, price in enumerate(record.prices)
            ],
        )
        carbon = pd.DataFrame(
            [
                {
                    "year": record.year,
                    "carbon_t": record.carbon_t,
                    "carbon_price_per_t": record.carbon_price,
                    "unserved_mwh": record.unserved_mwh,
                    "mean_draw_mw": record.mean_draw_mw,
                }
                for record in self.years
            ],
        )
        ledger = pd.DataFrame(
            [entry.model_dump() for entry in self.ledger],
            columns=list(LedgerEntry.model_fields),
        )
        return {"yearly_mix": mix, "investments": investments, "prices": prices, "carbon": carbon, "ledger": ledger}


def _by_technology(plants: Sequence[PowerPlantSpec], values: Iterable[float]) -> dict[Technology, float]:
    totals = dict.fromkeys(Technology, 0.0)
    for plant, value in zip(plants, values):
        totals[plant.technology] += float(value)
    return totals


@export
def investment_step(
    gencos: Sequence[GenCo],
    scenario: Scenario,
    year: int,
    rng: np.random.Generator,
) -> list[Investment]:
    """
    Let each GenCo, in a seeded random order, build at most one plant.

    A GenCo builds the candidate with the highest NPV at its own discount rate if that NPV is
    positive and it can pay the capex from cash. Equal NPVs go to the technology declared first.
    Candidates are valued against every plant owned or under construction, so a GenCo sees the
    orders placed before it this year.
    """
    candidates = scenario.candidates
    order = rng.permutation(len(gencos))
    cashflows: dict[int, np.ndarray] = {}
    made: list[Investment] = []

    for index in order.tolist():
        genco = gencos[index]
        if not cashflows:
            fleet = [plant for owner in gencos for plant in owner.portfolio]
            cashflows = {k: candidate_cashflows(c, scenario, year, fleet) for k, c in enumerate(candidates)}
        values = [npv(cashflows[k], genco.discount_rate) for k in range(len(candidates))]
        keys = [(value, -candidate.technology.rank, -k) for k, (value, candidate) in enumerate(zip(values, candidates))]
        best = keys.index(max(keys))
        choice = candidates[best]
        if values[best] <= 0:
            log.debug("%s in %d: best candidate %s has NPV %.4g", genco.id, year, choice.technology.value, values[best])
            continue
        if genco.cash < choice.total_capex:
            log.debug("%s in %d: cannot afford %s (cash %.4g)", genco.id, year, choice.technology.value, genco.cash)
            continue

        commission_year = year + scenario.construction_delay(choice.technology)
        genco.cash -= choice.total_capex
        genco.portfolio.append(choice.commissioned(commission_year))
        cashflows = {}
        made.append(
            Investment(
                year=year,
                genco=genco.id,
                technology=choice.technology,
                capacity_mw=choice.capacity_mw,
                capex=choice.total_capex,
                npv=values[best],
                commission_year=commission_year,
            ),
        )
        log.debug("%s orders %s for %d", genco.id, choice.name or choice.technology.value, commission_year)
    return made


@export
def run_simulation(
    scenario: Scenario,
    dist: ResidualDistribution | None = None,
    seed: int = 0,
) -> SimulationResult:
    """
    Simulate every scenario year: retire, perturb demand, dispatch, settle, then invest.

    Each representative-day hour gets one draw from ``dist`` per year. The investment order and
    the demand draws come from separate streams of ``seed``, so the result depends only on the
    scenario, the distribution and the seed.
    """
    invest_stream, demand_stream = np.random.SeedSequence(seed).spawn(2)
    invest_rng = np.random.default_rng(invest_stream)
    demand_rng = np.random.default_rng(demand_stream)
    gencos = scenario.initial_gencos()
    hours = scenario.segment_hours()

    records: list[YearRecord] = []
    ledger: list[LedgerEntry] = []
    for year in scenario.years:
        retired = [plant for genco in gencos for plant in genco.retire(year)]
        cash_start = [genco.cash for genco in gencos]

        demand = scenario.segment_demand(year)
        draws = np.zeros_like(demand)
        if dist is not None:
            demand, draws = perturb_demand(demand, dist, demand_rng)

        owners = [i for i, genco in enumerate(gencos) for plant in genco.portfolio if plant.operating(year)]
        plants = [plant for genco in gencos for plant in genco.portfolio if plant.operating(year)]
        carbon_price = scenario.carbon_price(year)
        costs, available = fleet_offers(plants, scenario, year, carbon_price)
        outcome = dispatch_segments(costs, available, demand, value_of_lost_load(scenario, costs))

        energy = hours @ outcome.dispatch
        revenue = (hours * outcome.price) @ outcome.dispatch
        fuel = np.array(
            [
                mwh * scenario.fuel_price(plant.fuel, year) / plant.efficiency if plant.fuel else 0.0
                for plant, mwh in zip(plants, energy)
            ],
        )
        intensity = np.array([plant.carbon_intensity_t_per_mwh for plant in plants])
        emissions = energy * intensity
        carbon_cost = emissions * carbon_price
        opex = np.array(
            [
                mwh * plant.variable_opex_per_mwh + plant.capacity_mw * plant.fixed_opex_per_mw_year
                for plant, mwh in zip(plants, energy)
            ],
        )

        per_genco = {
            name: np.bincount(owners, weights=values, minlength=len(gencos)) if plants else np.zeros(len(gencos))
            for name, values in {"revenue": revenue, "fuel": fuel, "carbon": carbon_cost, "opex": opex}.items()
        }
        for i, genco in enumerate(gencos):
            genco.cash += per_genco["revenue"][i] - per_genco["fuel"][i] - per_genco["carbon"][i] - per_genco["opex"][i]

        investments = investment_step(gencos, scenario, year, invest_rng)
        capex = dict.fromkeys((genco.id for genco in gencos), 0.0)
        for investment in investments:
            capex[investment.genco] += investment.capex

        ledger.extend(
            LedgerEntry(
                year=year,
                genco=genco.id,
                cash_start=cash_start[i],
                revenue=float(per_genco["revenue"][i]),
                fuel=float(per_genco["fuel"][i]),
                carbon=float(per_genco["carbon"][i]),
                opex=float(per_genco["opex"][i]),
                capex=capex[genco.id],
                cash_end=genco.cash,
            )
            for i, genco in enumerate(gencos)
        )
        records.append(
            YearRecord(
                year=year,
                dispatch_mwh=_by_technology(plants, energy),
                capacity_mw=_by_technology(plants, (plant.capacity_mw for plant in plants)),
                prices=outcome.price,
                unserved_mwh=float(hours @ outcome.unserved),
                carbon_t=float(np.sum(emissions)),
                carbon_price=carbon_price,
                mean_draw_mw=float(draws.mean()),
                retirements_mw=_by_technology(retired, (plant.capacity_mw for plant in retired)),
                investments=tuple(investments),
            ),
        )
        log.debug("%d: %.4g MWh unserved, %.4g t CO2", year, records[-1].unserved_mwh, records[-1].carbon_t)

    log.info("Simulated %s %d-%d with seed %d", scenario.name, scenario.start_year, scenario.end_year, seed)
    return SimulationResult(
        scenario=scenario.name,
        seed=seed,
        distribution=None if dist is None else dist.family,
        years=tuple(records),
        ledger=tuple(ledger),
    )


@export
def relative_carbon(result: SimulationResult, baseline: SimulationResult) -> float:
    """Mean yearly emissions of ``result`` as a fraction of ``baseline``'s."""
    if baseline.mean_carbon_t == 0:
        msg = "the baseline emitted no carbon"
        raise MarketError(msg)
    return result.mean_carbon_t / baseline.mean_carbon_t


def _sweep_run(scenario: Scenario, sd: float, seed: int) -> dict[str, float]:
    result = run_simulation(scenario, ResidualDistribution.normal(0.0, sd), seed)
    row = {"sd_mw": sd, "seed": seed, "carbon_t": result.mean_carbon_t}
    row |= {tech.value: mwh for tech, mwh in result.mean_dispatch_mwh.items()}
    return row


@export
def sensitivity_sweep(
    scenario: Scenario,
    sds: Iterable[float] = SWEEP_SDS,
    seeds: Iterable[int] = (0, 1, 2),
    *,
    control: bool = False,
    jobs: int = 1,
) -> pd.DataFrame:
    """
    Mean yearly energy per technology under Normal(0, sd) demand errors, one row per sd.

    Each row averages the runs over ``seeds`` and gives their standard deviation. ``control``
    prepends an sd of 0, which reproduces the unperturbed run. The table does not depend on
    ``jobs``.
    """
    sds = [float(sd) for sd in sds]
    seeds = [int(seed) for seed in seeds]
    if not sds or not seeds:
        msg = "a sweep needs at least one standard deviation and one seed"
        raise ConfigError(msg)
    if any(sd < 0 for sd in sds):
        msg = f"standard deviations must be non-negative, got {sds}"
        raise ConfigError(msg)
    if control and 0.0 not in sds:
        sds = [0.0, *sds]

    log.info("Sweeping %d standard deviation(s) over %d seed(s)", len(sds), len(seeds))
    runs = pd.DataFrame(
        Parallel(n_jobs=jobs)(delayed(_sweep_run)(scenario, sd, seed) for sd in sds for seed in seeds),
    )
    columns = [tech.value for tech in Technology] + ["carbon_t"]
    grouped = runs.groupby("sd_mw", sort=False)[columns]
    means = grouped.mean().add_suffix("_mean")
    spreads = grouped.std(ddof=0).add_suffix("_sd")
    table = pd.concat([means, spreads], axis=1)
    table = table[[f"{column}_{stat}" for column in columns for stat in ("mean", "sd")]]
    table.insert(0, "n_seeds", len(seeds))
    return table.reset_index()
