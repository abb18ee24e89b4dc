"""Agent-based long-term electricity market driven by merit-order dispatch and NPV investment."""

from typing import Any

__all__ = []


def export(defn: Any) -> Any:  # noqa: ANN401
    """Module-level export decorator."""
    globals()[defn.__name__] = defn
    __all__.append(defn.__name__)  # noqa: PYI056
    return defn


from forecast_impact.market.models import (
    DEFAULT_SCENARIO_PATH,
    GenCo,
    OwnedPlant,
    PowerPlantSpec,
    RepresentativeDay,
    Scenario,
    Technology,
    default_scenario,
    load_scenario,
)
from forecast_impact.market.dispatch import (
    Dispatch,
    dispatch_segments,
    fleet_offers,
    merit_order_dispatch,
    perturb_demand,
    srmc,
    value_of_lost_load,
)
from forecast_impact.market.finance import candidate_cashflows, expected_plant_npv, forecast_carbon_price, npv
from forecast_impact.market.simulation import (
    SWEEP_SDS,
    Investment,
    LedgerEntry,
    SimulationResult,
    YearRecord,
    investment_step,
    relative_carbon,
    run_simulation,
    sensitivity_sweep,
)
