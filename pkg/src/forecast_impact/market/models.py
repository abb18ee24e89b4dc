"""Power plants, generation companies and market scenarios."""

from __future__ import annotations

import logging
from enum import Enum
from pathlib import Path
from typing import Any

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from forecast_impact.errors import ConfigError, MissingFuelPriceError
from forecast_impact.market import export


log = logging.getLogger(__name__)

HOURS_PER_DAY = 24
DAYS_PER_YEAR = 365.0
DEFAULT_SCENARIO_PATH = Path(__file__).parent / "scenarios" / "default.yaml"


@export
class Technology(str, Enum):
    """Generation technologies, in tie-break order."""

    CCGT = "CCGT"
    COAL = "coal"
    NUCLEAR = "nuclear"
    ONSHORE_WIND = "onshore_wind"
    OFFSHORE_WIND = "offshore_wind"
    PHOTOVOLTAIC = "photovoltaic"
    RECIP_GAS = "recip_gas"

    @property
    def rank(self) -> int:
        """Position in declaration order."""
        return list(Technology).index(self)

    @property
    def intermittent(self) -> bool:
        """True for weather-driven technologies."""
        return self in INTERMITTENT


INTERMITTENT = frozenset({Technology.ONSHORE_WIND, Technology.OFFSHORE_WIND, Technology.PHOTOVOLTAIC})


@export
class PowerPlantSpec(BaseModel):
    """
    One power plant or candidate template.

    Costs are per MWh generated, per MW of capacity per year and per MW built. ``efficiency`` is
    the fraction of fuel energy turned into electricity and only matters when ``fuel`` is set.
    """

    model_config = ConfigDict(frozen=True)

    name: str = ""
    technology: Technology
    capacity_mw: float = Field(gt=0)
    efficiency: float = Field(default=1.0, gt=0, le=1)
    fuel: str | None = None
    variable_opex_per_mwh: float = Field(default=0.0, ge=0)
    fixed_opex_per_mw_year: float = Field(default=0.0, ge=0)
    capex_per_mw: float = Field(default=0.0, ge=0)
    carbon_intensity_t_per_mwh: float = Field(default=0.0, ge=0)
    lifetime_years: int = Field(default=25, ge=1)
    commission_year: int = 0
    dispatchable: bool = True

    @model_validator(mode="before")
    @classmethod
    def default_dispatchable(cls, data: Any) -> Any:  # noqa: ANN401
        if isinstance(data, dict) and "dispatchable" not in data and "technology" in data:
            data = {**data, "dispatchable": Technology(data["technology"]) not in INTERMITTENT}
        return data

    @model_validator(mode="after")
    def check_intermittent(self) -> PowerPlantSpec:
        if self.technology.intermittent and self.dispatchable:
            msg = f"{self.technology.value} is intermittent and cannot be dispatchable"
            raise ValueError(msg)
        if self.technology.intermittent and self.fuel is not None:
            msg = f"{self.technology.value} burns no fuel"
            raise ValueError(msg)
        return self

    @property
    def retire_year(self) -> int:
        """First year the plant no longer operates."""
        return self.commission_year + self.lifetime_years

    @property
    def total_capex(self) -> float:
        """Cost of building the whole plant."""
        return self.capex_per_mw * self.capacity_mw

    def operating(self, year: int) -> bool:
        """True if the plant generates in ``year``."""
        return self.commission_year <= year < self.retire_year

    def commissioned(self, year: int) -> PowerPlantSpec:
        """A copy commissioned in ``year``."""
        return self.model_copy(update={"commission_year": year})


@export
class OwnedPlant(PowerPlantSpec):
    """A plant entry in a scenario file, naming the GenCo that owns it."""

    owner: str


@export
class GenCo(BaseModel):
    """A generation company: cash, a discount rate and the plants it owns."""

    id: str
    cash: float = 0.0
    discount_rate: float = Field(default=0.06, gt=-1)
    portfolio: list[PowerPlantSpec] = Field(default_factory=list)

    def retire(self, year: int) -> list[PowerPlantSpec]:
        """Drop plants that stop operating before ``year`` and return them."""
        retired = [plant for plant in self.portfolio if plant.retire_year <= year]
        self.portfolio = [plant for plant in self.portfolio if plant.retire_year > year]
        return retired


@export
class RepresentativeDay(BaseModel):
    """Hourly demand (MW) for one representative day and the number of real days it stands for."""

    model_config = ConfigDict(frozen=True)

    name: str
    weight_days: float = Field(gt=0)
    demand_mw: tuple[float, ...] = Field(min_length=HOURS_PER_DAY, max_length=HOURS_PER_DAY)

    @field_validator("demand_mw")
    @classmethod
    def non_negative(cls, v: tuple[float, ...]) -> tuple[float, ...]:
        if not all(np.isfinite(v)) or min(v) < 0:
            msg = "representative-day demand must be finite and non-negative"
            raise ValueError(msg)
        return v


class DemandSection(BaseModel):
    """Demand growth applied to every representative day."""

    model_config = ConfigDict(frozen=True)

    growth_per_year: float = Field(default=0.0, gt=-1)


class Economics(BaseModel):
    """Market-wide economic settings."""

    model_config = ConfigDict(frozen=True)

    construction_delay_thermal_years: int = Field(default=2, ge=0)
    construction_delay_renewable_years: int = Field(default=1, ge=0)
    value_of_lost_load_per_mwh: float | None = Field(default=None, gt=0)
    forward_horizon_years: int = Field(default=10, ge=1)


def _curve(points: dict[int, float], year: int) -> float:
    years = sorted(points)
    return float(np.interp(year, years, [points[y] for y in years]))


@export
class Scenario(BaseModel):
    """
    Everything a market simulation needs.

    Price curves map years to values; years between points are interpolated linearly and years
    outside are held at the nearest point. ``carbon_per_t`` holds both the history GenCos regress on and
    the prices actually charged. Capacity factors give one row of 24 hourly values per
    representative day; technologies without an entry are fully available.
    """

    model_config = ConfigDict(frozen=True)

    name: str = "scenario"
    start_year: int = 2018
    end_year: int = 2035
    gencos: tuple[GenCo, ...] = Field(min_length=1)
    plants: tuple[OwnedPlant, ...] = ()
    fuels_per_mwh: dict[str, dict[int, float]] = Field(default_factory=dict)
    carbon_per_t: dict[int, float] = Field(min_length=1)
    demand: DemandSection = DemandSection()
    representative_days: tuple[RepresentativeDay, ...] = Field(min_length=1)
    capacity_factors: dict[Technology, tuple[tuple[float, ...], ...]] = Field(default_factory=dict)
    candidates: tuple[PowerPlantSpec, ...] = Field(min_length=1)
    reference_price_per_mwh: dict[int, float] = Field(min_length=1)
    economics: Economics = Economics()

    @field_validator("fuels_per_mwh")
    @classmethod
    def non_empty_curves(cls, v: dict[str, dict[int, float]]) -> dict[str, dict[int, float]]:
        for fuel, points in v.items():
            if not points:
                msg = f"fuel {fuel!r} has no prices"
                raise ValueError(msg)
        return v

    @model_validator(mode="after")
    def check_consistency(self) -> Scenario:  # noqa: C901
        if self.end_year < self.start_year:
            msg = f"end_year {self.end_year} is before start_year {self.start_year}"
            raise ValueError(msg)
        weights = sum(day.weight_days for day in self.representative_days)
        if abs(weights - DAYS_PER_YEAR) > 1e-6:  # noqa: PLR2004
            msg = f"representative-day weights sum to {weights}, not {DAYS_PER_YEAR:g}"
            raise ValueError(msg)
        ids = [genco.id for genco in self.gencos]
        if len(set(ids)) != len(ids):
            msg = f"GenCo ids are not unique: {ids}"
            raise ValueError(msg)
        for plant in self.plants:
            if plant.owner not in ids:
                msg = f"plant {plant.name or plant.technology.value} is owned by unknown GenCo {plant.owner!r}"
                raise ValueError(msg)
        for technology, rows in self.capacity_factors.items():
            if len(rows) != len(self.representative_days) or any(len(row) != HOURS_PER_DAY for row in rows):
                msg = f"{technology.value} capacity factors need {len(self.representative_days)} rows of 24 values"
                raise ValueError(msg)
            if not all(0.0 <= value <= 1.0 for row in rows for value in row):
                msg = f"{technology.value} capacity factors must lie in [0, 1]"
                raise ValueError(msg)
        for plant in (*self.plants, *self.candidates):
            if plant.technology.intermittent and plant.technology not in self.capacity_factors:
                msg = f"{plant.technology.value} is intermittent but has no capacity factors"
                raise ValueError(msg)
        return self

    @property
    def years(self) -> range:
        """Simulated years, inclusive of ``end_year``."""
        return range(self.start_year, self.end_year + 1)

    @property
    def n_segments(self) -> int:
        """Number of representative-day hours."""
        return len(self.representative_days) * HOURS_PER_DAY

    def segment_hours(self) -> np.ndarray:
        """Real hours each segment stands for in a year."""
        return np.repeat([day.weight_days for day in self.representative_days], HOURS_PER_DAY)

    def segment_demand(self, year: int) -> np.ndarray:
        """Segment demand (MW) in ``year`` after growth."""
        base = np.concatenate([day.demand_mw for day in self.representative_days])
        return base * (1.0 + self.demand.growth_per_year) ** (year - self.start_year)

    def availability(self, technology: Technology) -> np.ndarray:
        """Fraction of capacity available in each segment."""
        rows = self.capacity_factors.get(technology)
        if rows is None:
            return np.ones(self.n_segments)
        return np.concatenate(rows).astype(float)

    def fuel_price(self, fuel: str, year: int) -> float:
        """Fuel price per MWh of fuel energy."""
        if fuel not in self.fuels_per_mwh:
            msg = f"no price curve for fuel {fuel!r}"
            raise MissingFuelPriceError(msg)
        return _curve(self.fuels_per_mwh[fuel], year)

    def carbon_price(self, year: int) -> float:
        """Carbon price charged per tonne in ``year``."""
        return _curve(self.carbon_per_t, year)

    def carbon_history(self, year: int) -> dict[int, float]:
        """Carbon prices known by ``year``."""
        return {y: price for y, price in self.carbon_per_t.items() if y <= year}

    def reference_price(self, year: int) -> float:
        """Expected electricity price per MWh."""
        return _curve(self.reference_price_per_mwh, year)

    @property
    def final_reference_price(self) -> float:
        """Reference price at the last year of the curve."""
        return self.reference_price_per_mwh[max(self.reference_price_per_mwh)]

    def construction_delay(self, technology: Technology) -> int:
        """Years between the investment decision and first generation."""
        if technology.intermittent:
            return self.economics.construction_delay_renewable_years
        return self.economics.construction_delay_thermal_years

    def initial_gencos(self) -> list[GenCo]:
        """Fresh GenCos holding their scenario plants."""
        gencos = [genco.model_copy(deep=True) for genco in self.gencos]
        by_id = {genco.id: genco for genco in gencos}
        for plant in self.plants:
            spec = PowerPlantSpec.model_validate(plant.model_dump(exclude={"owner"}))
            by_id[plant.owner].portfolio.append(spec)
        return gencos


@export
def load_scenario(path: Path) -> Scenario:
    """Read and validate a YAML scenario file."""
    try:
        with Path(path).open() as f:
            raw = yaml.safe_load(f)
    except OSError as exc:
        msg = f"cannot read scenario {path}: {exc}"
        raise ConfigError(msg) from exc
    except yaml.YAMLError as exc:
        msg = f"scenario {path} is not valid YAML: {exc}"
        raise ConfigError(msg) from exc
    if not isinstance(raw, dict):
        msg = f"scenario {path} must be a mapping"
        raise ConfigError(msg)
    scenario = Scenario.model_validate(raw)
    log.debug("Loaded scenario %s from %s", scenario.name, path)
    return scenario


@export
def default_scenario() -> Scenario:
    """The synthetic seven-technology scenario shipped with the package."""
    return load_scenario(DEFAULT_SCENARIO_PATH)
