"""JSON documents for fitted models and online checkpoints."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import TYPE_CHECKING, Any

import numpy as np
from pydantic import BaseModel, field_validator

from forecast_impact.errors import NotFittedError
from forecast_impact.learners import export
from forecast_impact.learners.registry import make_regressor
from forecast_impact.learners.utils import OnlineRegressor, Regressor


if TYPE_CHECKING:
    from forecast_impact.data import FeatureMatrix


log = logging.getLogger(__name__)

FORMAT_VERSION = 1
ARRAY_TAG = "__ndarray__"


def encode_state(value: Any) -> Any:  # noqa: ANN401
    """Replace numpy arrays (at any depth) with tagged dtype/shape/data mappings."""
    if isinstance(value, np.ndarray):
        return {ARRAY_TAG: True, "dtype": value.dtype.str, "shape": list(value.shape), "data": value.ravel().tolist()}
    if isinstance(value, dict):
        return {key: encode_state(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [encode_state(item) for item in value]
    if isinstance(value, np.generic):
        return value.item()
    return value


def decode_state(value: Any) -> Any:  # noqa: ANN401
    """Inverse of encode_state."""
    if isinstance(value, dict):
        if value.get(ARRAY_TAG):
            return np.array(value["data"], dtype=np.dtype(value["dtype"])).reshape(value["shape"])
        return {key: decode_state(item) for key, item in value.items()}
    if isinstance(value, list):
        return [decode_state(item) for item in value]
    return value


@export
class ModelDocument(BaseModel):
    """Self-describing record of a fitted regressor and the feature pipeline it expects."""

    format_version: int = FORMAT_VERSION
    kind: str
    hyperparams: dict[str, Any]
    n_features: int
    state: dict[str, Any]
    feature_names: list[str] = []
    target_hour: int | None = None
    scaler: dict[str, list[float]] | None = None
    target_scaler: dict[str, list[float]] | None = None
    updates_seen: int | None = None

    @field_validator("format_version")
    @classmethod
    def _known_version(cls, v: int) -> int:
        if v != FORMAT_VERSION:
            msg = f"unsupported model document version {v}; this build reads version {FORMAT_VERSION}"
            raise ValueError(msg)
        return v

    def build(self) -> Regressor:
        """Recreate the fitted regressor."""
        model = make_regressor(self.kind, **self.hyperparams)
        model.set_state(decode_state(self.state), self.n_features)
        return model


@export
def model_document(model: Regressor, matrix: FeatureMatrix | None = None) -> ModelDocument:
    """Describe a fitted model, optionally with the feature matrix it was trained on."""
    if not model.fitted:
        msg = f"{model.kind} model has not been fitted"
        raise NotFittedError(msg)
    return ModelDocument(
        kind=model.kind,
        hyperparams=encode_state(model.hyperparams),
        n_features=model.n_features or 0,
        state=encode_state(model.get_state()),
        feature_names=list(matrix.feature_names) if matrix is not None else [],
        target_hour=matrix.target_hour if matrix is not None else None,
        scaler=matrix.scaler.to_dict() if matrix is not None and matrix.scaler is not None else None,
        target_scaler=(
            matrix.target_scaler.to_dict() if matrix is not None and matrix.target_scaler is not None else None
        ),
        updates_seen=model.updates_seen if isinstance(model, OnlineRegressor) else None,
    )


@export
def dump_model(model: Regressor, path: Path, matrix: FeatureMatrix | None = None) -> ModelDocument:
    """Write a model document as JSON and return it."""
    document = model_document(model, matrix)
    path.write_text(document.model_dump_json(indent=2) + "\n", encoding="utf-8")
    log.debug("wrote %s model to %s", model.kind, path)
    return document


@export
def load_model(path: Path) -> tuple[Regressor, ModelDocument]:
    """Read a model document and rebuild the regressor it describes."""
    document = ModelDocument.model_validate_json(Path(path).read_text(encoding="utf-8"))
    return document.build(), document
