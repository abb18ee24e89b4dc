"""Offline and online regressors implemented on numpy."""

from typing import Any

__all__ = []


def export(defn: Any) -> Any:  # noqa: ANN401
    """Module-level export decorator."""
    globals()[defn.__name__] = defn
    __all__.append(defn.__name__)  # noqa: PYI056
    return defn


from forecast_impact.learners.utils import (
    OnlineRegressor,
    OnlineRegressorProtocol,
    Regressor,
    RegressorProtocol,
    predict,
)
from forecast_impact.learners.linear import (
    CoordinateDescentRegressor,
    LinearRegressor,
    fit_elastic_net,
    fit_lasso,
    fit_ols,
    fit_ridge,
)
from forecast_impact.learners.neighbors import KNeighborsRegressor, fit_knn
from forecast_impact.learners.tree import TreeRegressor, fit_tree
from forecast_impact.learners.ensemble import (
    AdaBoostRegressor,
    ForestRegressor,
    GradientBoostingRegressor,
    fit_adaboost,
    fit_extra_trees,
    fit_gradient_boosting,
    fit_random_forest,
)
from forecast_impact.learners.svr import LinearSVR, fit_linear_svr
from forecast_impact.learners.mlp import MLPRegressor, fit_mlp
from forecast_impact.learners.online import (
    BoxCoxRegressor,
    OnlineLinearRegressor,
    OnlineMLPRegressor,
    PassiveAggressiveRegressor,
    boxcox_inverse,
    boxcox_transform,
)
from forecast_impact.learners.registry import (
    OFFLINE_GRIDS,
    ONLINE_GRIDS,
    REGRESSORS,
    expand_grid,
    make_regressor,
)
from forecast_impact.learners.serialize import ModelDocument, dump_model, load_model, model_document
