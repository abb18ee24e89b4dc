"""Tests for dispatch, investment appraisal and the yearly market simulation."""

from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd
import pytest
from pydantic import ValidationError

from forecast_impact.errors import ConfigError, DegenerateHistoryError, MissingFuelPriceError
from forecast_impact.market import (
    SWEEP_SDS,
    PowerPlantSpec,
    Scenario,
    SimulationResult,
    Technology,
    candidate_cashflows,
    default_scenario,
    dispatch_segments,
    expected_plant_npv,
    forecast_carbon_price,
    investment_step,
    load_scenario,
    merit_order_dispatch,
    npv,
    perturb_demand,
    relative_carbon,
    run_simulation,
    sensitivity_sweep,
    srmc,
)
from forecast_impact.residuals import ResidualDistribution


SHAPE = [60.0 + 3.0 * hour for hour in range(24)]


def toy_scenario(**overrides: Any) -> Scenario:  # noqa: ANN401
    raw: dict[str, Any] = {
        "name": "toy",
        "start_year": 2018,
        "end_year": 2022,
        "gencos": [{"id": "a", "cash": 1e6}, {"id": "b", "cash": 0.0}],
        "plants": [
            {
                "owner": "a",
                "name": "base",
                "technology": "nuclear",
                "capacity_mw": 60,
                "variable_opex_per_mwh": 10.0,
                "lifetime_years": 50,
                "commission_year": 2000,
            },
            {
                "owner": "b",
                "name": "gas",
                "technology": "CCGT",
                "capacity_mw": 80,
                "efficiency": 0.5,
                "fuel": "gas",
                "carbon_intensity_t_per_mwh": 0.4,
                "lifetime_years": 50,
                "commission_year": 2000,
            },
            {
                "owner": "b",
                "name": "wind",
                "technology": "onshore_wind",
                "capacity_mw": 50,
                "lifetime_years": 50,
                "commission_year": 2000,
            },
        ],
        "fuels_per_mwh": {"gas": {2018: 10.0}},
        "carbon_per_t": {2016: 10.0, 2017: 10.0, 2018: 10.0},
        "representative_days": [{"name": "day", "weight_days": 365.0, "demand_mw": SHAPE}],
        "capacity_factors": {"onshore_wind": [[0.5] * 24]},
        "candidates": [
            {
                "technology": "CCGT",
                "capacity_mw": 10,
                "efficiency": 0.5,
                "fuel": "gas",
                "capex_per_mw": 1e9,
                "lifetime_years": 20,
            },
        ],
        "reference_price_per_mwh": {2018: 40.0},
    }
    return Scenario.model_validate(raw | overrides)


def thermal(**fields: Any) -> PowerPlantSpec:  # noqa: ANN401
    return PowerPlantSpec.model_validate({"technology": "CCGT", "capacity_mw": 100, **fields})


def assert_same_run(left: SimulationResult, right: SimulationResult) -> None:
    for name, table in left.tables().items():
        pd.testing.assert_frame_equal(table, right.tables()[name], check_exact=True)


########
# SRMC #
########
def test_wind_costs_nothing():
    wind = PowerPlantSpec(technology=Technology.ONSHORE_WIND, capacity_mw=100)
    assert not wind.dispatchable
    assert srmc(wind, None, 80.0) == 0.0


def test_srmc_arithmetic():
    plant = thermal(efficiency=0.5, fuel="gas", carbon_intensity_t_per_mwh=0.4, variable_opex_per_mwh=2.0)
    assert srmc(plant, 20.0, 25.0) == pytest.approx(52.0)


def test_carbon_price_hits_coal_harder():
    coal = thermal(technology="coal", efficiency=0.4, fuel="coal", carbon_intensity_t_per_mwh=0.9)
    ccgt = thermal(efficiency=0.55, fuel="gas", carbon_intensity_t_per_mwh=0.36)
    assert srmc(coal, 8.0, 40.0) - srmc(coal, 8.0, 20.0) > srmc(ccgt, 18.0, 40.0) - srmc(ccgt, 18.0, 20.0)


def test_missing_fuel_price():
    with pytest.raises(MissingFuelPriceError):
        srmc(thermal(fuel="gas"), None, 10.0)
    with pytest.raises(MissingFuelPriceError):
        toy_scenario().fuel_price("oil", 2018)


def test_intermittent_plants_are_not_dispatchable():
    with pytest.raises(ValidationError):
        PowerPlantSpec(technology=Technology.PHOTOVOLTAIC, capacity_mw=10, dispatchable=True)
    with pytest.raises(ValidationError):
        PowerPlantSpec(technology=Technology.OFFSHORE_WIND, capacity_mw=10, fuel="gas")
    with pytest.raises(ValidationError):
        thermal(capacity_mw=0)


###############
# Merit order #
###############
def test_single_plant():
    dispatch, price, unserved = merit_order_dispatch([17.0], [100.0], 60.0)
    assert dispatch.tolist() == [60.0]
    assert price == 17.0
    assert unserved == 0.0


def test_three_plant_fill():
    dispatch, price, unserved = merit_order_dispatch([10.0, 20.0, 30.0], [50.0, 50.0, 50.0], 80.0)
    assert dispatch.tolist() == [50.0, 30.0, 0.0]
    assert price == 20.0
    assert unserved == 0.0


def test_equal_costs_fill_lower_index_first():
    dispatch, _, _ = merit_order_dispatch([10.0, 10.0], [50.0, 50.0], 60.0)
    assert dispatch.tolist() == [50.0, 10.0]


def test_shortage_is_priced_at_value_of_lost_load():
    dispatch, price, unserved = merit_order_dispatch([10.0, 30.0], [50.0, 50.0], 130.0)
    assert dispatch.tolist() == [50.0, 50.0]
    assert unserved == pytest.approx(30.0)
    assert price == 300.0
    assert merit_order_dispatch([10.0], [50.0], 60.0, value_of_lost_load=5000.0)[1] == 5000.0


def test_nothing_to_dispatch():
    result = dispatch_segments(np.array([]), np.zeros((3, 0)), np.array([1.0, 0.0, 2.0]), 1000.0)
    assert result.unserved.tolist() == [1.0, 0.0, 2.0]
    assert result.price.tolist() == [1000.0, 0.0, 1000.0]
    assert merit_order_dispatch([5.0], [10.0], 0.0)[1] == 0.0


def greedy(costs: np.ndarray, available: np.ndarray, demand: float) -> tuple[list[float], float | None]:
    allocation = [0.0] * len(costs)
    remaining = demand
    marginal = None
    for i in sorted(range(len(costs)), key=lambda i: (costs[i], i)):
        take = min(available[i], remaining)
        if take > 0:
            allocation[i] = take
            marginal = costs[i]
        remaining -= take
    return allocation, marginal


def test_dispatch_matches_greedy_oracle():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        costs = rng.integers(0, 8, 6).astype(float)
        available = rng.uniform(0.0, 100.0, 6)
        demand = rng.uniform(0.0, 700.0)
        dispatch, price, unserved = merit_order_dispatch(costs, available, demand, value_of_lost_load=1e4)
        allocation, marginal = greedy(costs, available, demand)
        assert dispatch.tolist() == pytest.approx(allocation, abs=1e-9)
        assert dispatch.sum() + unserved == pytest.approx(demand, abs=1e-9)
        assert dispatch.sum() == pytest.approx(min(demand, available.sum()), abs=1e-9)
        assert price == (1e4 if unserved > 0 else marginal)
        assert costs @ dispatch == pytest.approx(costs @ np.array(allocation), abs=1e-6)


def test_segments_are_cleared_independently():
    costs = np.array([5.0, 15.0])
    available = np.array([[40.0, 40.0], [10.0, 40.0], [40.0, 40.0]])
    result = dispatch_segments(costs, available, np.array([30.0, 30.0, 70.0]))
    assert result.dispatch.tolist() == [[30.0, 0.0], [10.0, 20.0], [40.0, 30.0]]
    assert result.price.tolist() == [5.0, 15.0, 15.0]
    assert result.served.tolist() == [30.0, 30.0, 70.0]


################
# Perturbation #
################
def test_zero_point_mass_leaves_demand_alone():
    demand = np.array([100.0, 0.0, 2500.5])
    perturbed, draws = perturb_demand(demand, ResidualDistribution.point_mass(), np.random.default_rng(1))
    assert perturbed.tolist() == demand.tolist()
    assert draws.tolist() == [0.0, 0.0, 0.0]


def test_demand_is_floored_at_zero():
    perturbed, _ = perturb_demand(np.array([500.0]), ResidualDistribution.point_mass(-1500.0), np.random.default_rng(1))
    assert perturbed.tolist() == [0.0]


def test_perturbation_mean():
    sigma = 2000.0
    demand = np.full(10_000, 30_000.0)
    perturbed, draws = perturb_demand(demand, ResidualDistribution.normal(0.0, sigma), np.random.default_rng(2))
    assert abs(np.mean(perturbed - demand)) <= 3 * sigma / 100
    assert perturbed - demand == pytest.approx(draws)


#########
# Money #
#########
def test_npv_without_discounting_is_a_sum():
    assert npv([-100.0, 30.0, 40.0, 50.0], 0.0) == pytest.approx(20.0)


def test_npv_break_even():
    assert npv([-100.0, 110.0], 0.10) == pytest.approx(0.0, abs=1e-9)


def test_npv_annuity():
    assert npv([-1000.0] + [300.0] * 5, 0.06) == pytest.approx(263.71, abs=0.01)


def test_npv_falls_with_the_rate():
    values = [npv([-1000.0] + [300.0] * 5, rate) for rate in np.linspace(0.0, 0.3, 16)]
    assert all(a > b for a, b in zip(values, values[1:]))
    with pytest.raises(ConfigError):
        npv([1.0], -1.0)


def test_carbon_forecast_extends_an_exact_line():
    assert forecast_carbon_price({2016: 20.0, 2017: 22.0, 2018: 24.0}, 2019).tolist() == pytest.approx([26.0])
    assert forecast_carbon_price([(2016, 7.0), (2018, 7.0)], [2020, 2030]).tolist() == pytest.approx([7.0, 7.0])


def test_carbon_forecast_recovers_a_noisy_slope():
    rng = np.random.default_rng(3)
    years = np.arange(2000, 2021)
    history = dict(zip(years.tolist(), (10.0 + 1.5 * (years - 2000) + rng.normal(0.0, 1.0, len(years))).tolist()))
    early, late = forecast_carbon_price(history, [2025, 2035])
    assert (late - early) / 10 == pytest.approx(1.5, rel=0.1)


def test_carbon_forecast_floor_and_degenerate_history():
    assert forecast_carbon_price({2016: 30.0, 2018: 10.0}, 2040).tolist() == [0.0]
    with pytest.raises(DegenerateHistoryError):
        forecast_carbon_price([(2018, 10.0), (2018, 12.0)], 2019)
    with pytest.raises(DegenerateHistoryError):
        forecast_carbon_price({2018: 10.0}, 2019)


def test_free_plant_with_positive_margin_has_positive_npv():
    scenario = toy_scenario()
    fleet = scenario.initial_gencos()[1].portfolio
    wind = PowerPlantSpec(technology=Technology.ONSHORE_WIND, capacity_mw=10, lifetime_years=5)
    assert expected_plant_npv(wind, scenario, 2018, 0.05, fleet) > 0


def test_twin_of_the_marginal_plant_earns_nothing():
    scenario = toy_scenario(
        plants=[
            {
                "owner": "a",
                "technology": "CCGT",
                "capacity_mw": 200,
                "variable_opex_per_mwh": 20.0,
                "lifetime_years": 50,
                "commission_year": 2000,
            },
        ],
        fuels_per_mwh={},
    )
    fleet = scenario.initial_gencos()[0].portfolio
    twin = thermal(capacity_mw=200, variable_opex_per_mwh=20.0, capex_per_mw=1000.0, lifetime_years=8)
    flows = candidate_cashflows(twin, scenario, 2018, fleet)
    assert flows[1:].tolist() == [0.0] * 8
    assert expected_plant_npv(twin, scenario, 2018, 0.07, fleet) == -200_000.0


def test_npv_matches_hand_unrolled_dispatch():
    scenario = toy_scenario(
        plants=[
            {
                "owner": "a",
                "technology": "CCGT",
                "capacity_mw": 90,
                "variable_opex_per_mwh": 60.0,
                "lifetime_years": 50,
                "commission_year": 2000,
            },
        ],
        fuels_per_mwh={"coal": {2018: 10.0, 2021: 13.0}},
        carbon_per_t={2016: 20.0, 2017: 22.0, 2018: 24.0},
        representative_days=[{"name": "flat", "weight_days": 365.0, "demand_mw": [150.0] * 24}],
        demand={"growth_per_year": 0.05},
        economics={"value_of_lost_load_per_mwh": 1000.0},
    )
    fleet = scenario.initial_gencos()[0].portfolio
    coal = thermal(
        technology="coal",
        capacity_mw=80,
        efficiency=0.5,
        fuel="coal",
        carbon_intensity_t_per_mwh=0.5,
        fixed_opex_per_mw_year=1000.0,
        capex_per_mw=500.0,
        lifetime_years=3,
    )
    # Own costs 35, 38, 41; demand 157.5, 165.4, 173.6 against 170 MW, so 2021 is short
    flows = [-40_000.0] + [(price - cost) * 80 * 8760 - 80_000.0 for price, cost in [(60, 35), (60, 38), (1000, 41)]]
    oracle = sum(flow / 1.05**t for t, flow in enumerate(flows))
    assert expected_plant_npv(coal, scenario, 2018, 0.05, fleet, horizon=3) == pytest.approx(oracle, rel=1e-6)


def test_years_beyond_the_horizon_earn_the_reference_price():
    scenario = toy_scenario(fuels_per_mwh={"gas": {2018: 10.0}}, reference_price_per_mwh={2018: 30.0, 2030: 45.0})
    fleet = scenario.initial_gencos()[0].portfolio
    plant = thermal(efficiency=0.5, fuel="gas", fixed_opex_per_mw_year=500.0, lifetime_years=6)
    flows = candidate_cashflows(plant, scenario, 2018, fleet, horizon=2)
    assert len(flows) == 7
    # No carbon intensity, so own cost is the fuel alone: 10 / 0.5
    assert flows[3:].tolist() == pytest.approx([(45.0 - 20.0) * 100 * 8760 - 50_000.0] * 4)


##############
# Investment #
##############
def test_no_investment_when_every_npv_is_negative():
    scenario = toy_scenario()
    gencos = scenario.initial_gencos()
    assert investment_step(gencos, scenario, 2018, np.random.default_rng(0)) == []
    assert [genco.cash for genco in gencos] == [1e6, 0.0]


def test_only_the_genco_that_can_pay_invests():
    scenario = toy_scenario(
        candidates=[{"technology": "onshore_wind", "capacity_mw": 10, "capex_per_mw": 1000.0, "lifetime_years": 20}],
    )
    for seed in range(5):
        gencos = scenario.initial_gencos()
        made = investment_step(gencos, scenario, 2018, np.random.default_rng(seed))
        assert [(investment.genco, investment.commission_year) for investment in made] == [("a", 2019)]
        assert gencos[0].cash == 1e6 - 10_000.0
        assert len(gencos[0].portfolio) == 2
        assert gencos[1].cash == 0.0


def test_equal_npvs_pick_the_earlier_technology():
    template = {"capacity_mw": 10, "efficiency": 0.5, "fuel": "gas", "capex_per_mw": 1000.0, "lifetime_years": 20}
    scenario = toy_scenario(candidates=[{"technology": "recip_gas", **template}, {"technology": "CCGT", **template}])
    gencos = scenario.initial_gencos()
    made = investment_step(gencos, scenario, 2018, np.random.default_rng(0))
    assert [investment.technology for investment in made] == [Technology.CCGT]
    assert made[0].npv > 0
    assert made[0].commission_year == 2020


def test_at_most_one_investment_per_genco():
    scenario = toy_scenario(
        candidates=[
            {"technology": "onshore_wind", "capacity_mw": 10, "capex_per_mw": 1000.0, "lifetime_years": 20},
            {"technology": "photovoltaic", "capacity_mw": 10, "capex_per_mw": 1000.0, "lifetime_years": 20},
        ],
        capacity_factors={"onshore_wind": [[0.5] * 24], "photovoltaic": [[0.2] * 24]},
    )
    assert len(investment_step(scenario.initial_gencos(), scenario, 2018, np.random.default_rng(0))) == 1


##############
# Simulation #
##############
def test_stationary_market_repeats_itself():
    result = run_simulation(toy_scenario())
    assert [record.year for record in result.years] == [2018, 2019, 2020, 2021, 2022]
    assert result.years[0].dispatch_mwh == result.years[-1].dispatch_mwh
    assert result.investments == []


def test_zero_point_mass_equals_no_perturbation():
    scenario = toy_scenario()
    for seed in (0, 9):
        assert_same_run(run_simulation(scenario, ResidualDistribution.point_mass(), seed), run_simulation(scenario))


def test_runs_are_reproducible():
    scenario = toy_scenario()
    dist = ResidualDistribution.normal(0.0, 20.0)
    assert_same_run(run_simulation(scenario, dist, 4), run_simulation(scenario, dist, 4))
    first, second = run_simulation(scenario, dist, 4), run_simulation(scenario, dist, 5)
    assert first.years[0].prices.tolist() != second.years[0].prices.tolist()


def test_energy_and_carbon_accounting():
    scenario = toy_scenario()
    result = run_simulation(scenario, ResidualDistribution.normal(0.0, 40.0), 1)
    for record in result.years:
        for tech in Technology:
            assert record.dispatch_mwh[tech] <= record.capacity_mw[tech] * 8760 + 1e-6
        assert record.carbon_t == pytest.approx(record.dispatch_mwh[Technology.CCGT] * 0.4)
        assert record.mean_draw_mw != 0.0


def test_cash_is_conserved():
    scenario = toy_scenario(
        gencos=[{"id": "a", "cash": 1e6}, {"id": "b", "cash": 5e4}],
        candidates=[{"technology": "onshore_wind", "capacity_mw": 10, "capex_per_mw": 1000.0, "lifetime_years": 20}],
    )
    result = run_simulation(scenario, seed=3)
    assert result.investments
    ledger = result.tables()["ledger"]
    for _, year in ledger.groupby("year"):
        change = (year["cash_end"] - year["cash_start"]).sum()
        flows = (year["revenue"] - year["fuel"] - year["carbon"] - year["opex"] - year["capex"]).sum()
        assert change == pytest.approx(flows, rel=1e-12, abs=1e-6)
    for _, genco in ledger.groupby("genco"):
        assert genco["cash_start"].iloc[1:].tolist() == genco["cash_end"].iloc[:-1].tolist()


def test_retired_plants_stop_generating():
    scenario = toy_scenario()
    plants = [plant.model_dump() for plant in scenario.plants]
    plants[2] |= {"commission_year": 2000, "lifetime_years": 20}
    result = run_simulation(toy_scenario(plants=plants))
    by_year = {record.year: record for record in result.years}
    assert by_year[2019].capacity_mw[Technology.ONSHORE_WIND] == 50.0
    assert by_year[2020].retirements_mw[Technology.ONSHORE_WIND] == 50.0
    assert by_year[2020].dispatch_mwh[Technology.ONSHORE_WIND] == 0.0


def test_result_tables():
    result = run_simulation(toy_scenario(), ResidualDistribution.normal(0.0, 10.0), 2)
    tables = result.tables()
    assert set(tables) == {"yearly_mix", "investments", "prices", "carbon", "ledger"}
    assert len(tables["yearly_mix"]) == 5 * len(Technology)
    assert len(tables["prices"]) == 5 * 24
    assert len(tables["ledger"]) == 5 * 2
    assert relative_carbon(result, result) == 1.0


##########
# Sweeps #
##########
def test_control_row_is_the_unperturbed_run():
    scenario = toy_scenario()
    table = sensitivity_sweep(scenario, [30.0], [0], control=True)
    baseline = run_simulation(scenario)
    assert table["sd_mw"].tolist() == [0.0, 30.0]
    assert table.loc[0, "CCGT_mean"] == baseline.mean_dispatch_mwh[Technology.CCGT]
    assert table.loc[0, "carbon_t_mean"] == baseline.mean_carbon_t


def test_default_sweep_has_twenty_rows():
    table = sensitivity_sweep(toy_scenario(end_year=2019), seeds=(0, 1, 2))
    assert len(SWEEP_SDS) == 20
    assert table["sd_mw"].tolist() == list(SWEEP_SDS)
    assert set(table["n_seeds"]) == {3}


def test_sweep_does_not_depend_on_jobs():
    scenario = toy_scenario()
    pd.testing.assert_frame_equal(
        sensitivity_sweep(scenario, [10.0, 20.0], [0, 1]),
        sensitivity_sweep(scenario, [10.0, 20.0], [0, 1], jobs=2),
    )


def test_sweep_needs_inputs():
    with pytest.raises(ConfigError):
        sensitivity_sweep(toy_scenario(), [], [0])
    with pytest.raises(ConfigError):
        sensitivity_sweep(toy_scenario(), [10.0], [])


def test_large_errors_call_on_the_peaker():
    scenario = default_scenario()
    higher = 0
    for seed in range(10):
        calm = run_simulation(scenario, None, seed).mean_dispatch_mwh[Technology.RECIP_GAS]
        noisy = run_simulation(scenario, ResidualDistribution.normal(0.0, 20_000.0), seed)
        higher += noisy.mean_dispatch_mwh[Technology.RECIP_GAS] >= calm
    assert higher >= 8


#############
# Scenarios #
#############
def test_default_scenario():
    scenario = default_scenario()
    assert len(scenario.plants) == 7
    assert {plant.technology for plant in scenario.plants} == set(Technology)
    assert len(scenario.gencos) == 3
    assert scenario.n_segments == 96
    assert scenario.segment_hours().sum() == pytest.approx(8760.0)
    assert list(scenario.years) == list(range(2018, 2036))


def test_scenario_validation():
    with pytest.raises(ValidationError):
        toy_scenario(representative_days=[{"name": "day", "weight_days": 300.0, "demand_mw": SHAPE}])
    with pytest.raises(ValidationError):
        toy_scenario(capacity_factors={"onshore_wind": [[1.5] * 24]})
    with pytest.raises(ValidationError):
        toy_scenario(capacity_factors={})
    with pytest.raises(ValidationError):
        toy_scenario(plants=[{"owner": "nobody", "technology": "CCGT", "capacity_mw": 10}])


def test_load_scenario_errors(tmp_path: Path):
    with pytest.raises(ConfigError):
        load_scenario(tmp_path / "missing.yaml")
    (tmp_path / "list.yaml").write_text("- 1\n- 2\n")
    with pytest.raises(ConfigError):
        load_scenario(tmp_path / "list.yaml")
