"""Moving targets between MWh and the scale each learner trains on."""

from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np

from forecast_impact.evaluation import export


if TYPE_CHECKING:
    from forecast_impact.data import FeatureMatrix
    from forecast_impact.learners import Regressor


# Box-Cox needs strictly positive targets, so it learns raw MWh
RAW_TARGET_KINDS = frozenset({"boxcox"})


@export
def training_targets(model: Regressor, matrix: FeatureMatrix) -> np.ndarray:
    """Targets on the scale ``model`` learns from."""
    if model.kind in RAW_TARGET_KINDS:
        return matrix.targets.copy()
    return matrix.scaled_targets()


def to_mwh(model: Regressor, matrix: FeatureMatrix, values: np.ndarray) -> np.ndarray:
    """Map model outputs back to MWh."""
    if model.kind in RAW_TARGET_KINDS:
        return np.asarray(values, dtype=float)
    return matrix.unscale_targets(values)


@export
def fit_matrix(model: Regressor, matrix: FeatureMatrix) -> Regressor:
    """Fit on a scaled feature matrix."""
    return model.fit(matrix.rows, training_targets(model, matrix))


@export
def predict_matrix(model: Regressor, matrix: FeatureMatrix) -> np.ndarray:
    """Predict every row of a scaled feature matrix, in MWh."""
    return to_mwh(model, matrix, model.predict(matrix.rows))
