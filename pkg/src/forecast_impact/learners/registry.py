"""Regressor kinds by name, with the default hyperparameter grids."""

from __future__ import annotations

from itertools import product
from typing import Any

from forecast_impact.errors import ConfigError
from forecast_impact.learners import export
from forecast_impact.learners.ensemble import (
    AdaBoostRegressor,
    ExtraTreesRegressor,
    ForestRegressor,
    GradientBoostingRegressor,
)
from forecast_impact.learners.linear import CoordinateDescentRegressor, LassoRegressor, LinearRegressor, OLSRegressor
from forecast_impact.learners.mlp import MLPRegressor
from forecast_impact.learners.neighbors import KNeighborsRegressor
from forecast_impact.learners.online import (
    BoxCoxRegressor,
    OnlineLinearRegressor,
    OnlineMLPRegressor,
    PassiveAggressiveRegressor,
)
from forecast_impact.learners.svr import LinearSVR
from forecast_impact.learners.tree import TreeRegressor
from forecast_impact.learners.utils import Regressor


REGRESSORS: dict[str, type[Regressor]] = {
    cls.kind: cls
    for cls in (
        OLSRegressor,
        LinearRegressor,
        LassoRegressor,
        CoordinateDescentRegressor,
        KNeighborsRegressor,
        TreeRegressor,
        ForestRegressor,
        ExtraTreesRegressor,
        AdaBoostRegressor,
        GradientBoostingRegressor,
        LinearSVR,
        MLPRegressor,
        OnlineLinearRegressor,
        BoxCoxRegressor,
        PassiveAggressiveRegressor,
        OnlineMLPRegressor,
    )
}

Grid = dict[str, list[Any]]

OFFLINE_GRIDS: dict[str, Grid] = {
    "ols": {},
    "ridge": {"lam": [1.0]},
    "lasso": {},
    "elastic_net": {},
    "extra_trees": {"n_estimators": [16, 32]},
    "random_forest": {"n_estimators": [16, 32]},
    "adaboost": {"n_estimators": [16, 32]},
    "gradient_boosting": {"n_estimators": [16, 32], "learning_rate": [0.8, 1.0]},
    "linear_svr": {"kernel": ["linear", "rbf"], "C": [1.0, 10.0], "gamma": [0.001, 0.0001]},
    "mlp": {"activation": ["tanh", "relu"], "hidden_sizes": [(1,), (50,)], "l2_alpha": [0.00005, 0.0005]},
    "knn": {"k": [5, 20, 50]},
}

ONLINE_GRIDS: dict[str, Grid] = {
    "online_linear": {},
    "boxcox": {"power": [0.1, 0.05, 0.01]},
    "online_mlp": {"hidden_sizes": [(10, 50, 100), (10,), (20,), (50,), (10, 50)]},
    "passive_aggressive": {"C": [0.1, 1.0, 2.0], "fit_intercept": [True, False], "max_iter": [1, 10, 100, 1000]},
}


@export
def expand_grid(grid: Grid) -> list[dict[str, Any]]:
    """Cartesian product of a grid, in key order then value order; an empty grid is one empty combination."""
    for name, values in grid.items():
        if not values:
            msg = f"grid parameter {name!r} has no candidate values"
            raise ConfigError(msg)
    names = list(grid)
    return [dict(zip(names, values)) for values in product(*(grid[name] for name in names))]


@export
def make_regressor(kind: str, **params: Any) -> Regressor:  # noqa: ANN401
    """Build an unfitted regressor of a registered kind."""
    try:
        cls = REGRESSORS[kind]
    except KeyError:
        known = ", ".join(sorted(REGRESSORS))
        msg = f"unknown algorithm {kind!r}; expected one of: {known}"
        raise ConfigError(msg) from None
    try:
        return cls(**params)
    except TypeError as exc:
        msg = f"invalid hyperparameters for {kind!r}: {exc}"
        raise ConfigError(msg) from exc


def is_online(kind: str) -> bool:
    """True if the kind learns one example at a time."""
    return kind in REGRESSORS and REGRESSORS[kind].online
