"""Base classes and protocols for regressors."""

from __future__ import annotations

import logging
from typing import Any, ClassVar, Protocol

import numpy as np

from forecast_impact.errors import DimensionMismatchError, FitError, NotFittedError
from forecast_impact.learners import export


log = logging.getLogger(__name__)


def check_x(X: Any, n_features: int | None = None) -> np.ndarray:  # noqa: ANN401
    """Coerce X to a finite two-dimensional float array, optionally of a fixed width."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1 and n_features is not None and X.size == 0:
        X = X.reshape(0, n_features)
    if X.ndim != 2:  # noqa: PLR2004
        msg = f"X must be two-dimensional, got shape {X.shape}"
        raise FitError(msg)
    if n_features is not None and X.shape[1] != n_features:
        raise DimensionMismatchError(n_features, X.shape[1])
    if not np.all(np.isfinite(X)):
        msg = "X contains non-finite values"
        raise FitError(msg)
    return X


def check_xy(X: Any, y: Any) -> tuple[np.ndarray, np.ndarray]:  # noqa: ANN401
    """Coerce a training pair and check that it is aligned, finite and non-empty."""
    X = check_x(X)
    y = np.asarray(y, dtype=float).ravel()
    if len(X) != len(y):
        msg = f"X has {len(X)} rows but y has {len(y)} values"
        raise FitError(msg)
    if not len(y):
        msg = "cannot fit on zero rows"
        raise FitError(msg)
    if not np.all(np.isfinite(y)):
        msg = "y contains non-finite values"
        raise FitError(msg)
    return X, y


def frozen(array: np.ndarray) -> np.ndarray:
    """Mark a fitted array read-only."""
    array = np.array(array)
    array.setflags(write=False)
    return array


class RegressorProtocol(Protocol):
    """Protocol for a batch regressor."""

    kind: ClassVar[str]
    hyperparams: dict[str, Any]

    def fit(self, X: np.ndarray, y: np.ndarray) -> RegressorProtocol:
        """Fit on a design matrix and target vector."""
        ...

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Predict one value per row."""
        ...


class OnlineRegressorProtocol(RegressorProtocol, Protocol):
    """Protocol for a regressor that can also learn one example at a time."""

    updates_seen: int

    def predict_one(self, x: np.ndarray) -> float:
        """Predict a single example without changing state."""
        ...

    def learn_one(self, x: np.ndarray, y: float) -> None:
        """Update on a single example."""
        ...


@export
class Regressor:
    """
    Base class for a batch-trained regressor.

    Subclasses implement ``_fit`` and ``_predict`` on validated arrays and list the attributes
    that make up their fitted state in ``state_fields``.
    """

    kind: ClassVar[str] = ""
    online: ClassVar[bool] = False
    state_fields: ClassVar[tuple[str, ...]] = ()

    def __init__(self, **hyperparams: Any) -> None:  # noqa: ANN401
        """Store hyperparameters; nothing is fitted yet."""
        self.hyperparams: dict[str, Any] = hyperparams
        self.n_features: int | None = None
        self.diagnostics: dict[str, Any] = {}

    def __repr__(self) -> str:
        """Show kind and hyperparameters."""
        params = ", ".join(f"{k}={v!r}" for k, v in self.hyperparams.items())
        return f"{self.__class__.__name__}({params})"

    @property
    def fitted(self) -> bool:
        """True once fit has completed."""
        return self.n_features is not None

    def fit(self, X: np.ndarray, y: np.ndarray) -> Regressor:
        """Fit on a design matrix and target vector."""
        X, y = check_xy(X, y)
        self.diagnostics = {}
        self._fit(X, y)
        self.n_features = X.shape[1]
        return self

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Predict one value per row; rejects rows of a different width than at fit time."""
        if self.n_features is None:
            msg = f"{self.kind} model has not been fitted"
            raise NotFittedError(msg)
        X = check_x(X, self.n_features)
        if not len(X):
            return np.empty(0)
        return self._predict(X)

    def get_state(self) -> dict[str, Any]:
        """Fitted parameters keyed by attribute name."""
        return {name: getattr(self, name) for name in self.state_fields}

    def set_state(self, state: dict[str, Any], n_features: int) -> None:
        """Restore fitted parameters produced by get_state."""
        for name in self.state_fields:
            value = state[name]
            setattr(self, name, frozen(value) if isinstance(value, np.ndarray) else value)
        self.n_features = n_features

    def _fit(self, X: np.ndarray, y: np.ndarray) -> None:
        raise NotImplementedError

    def _predict(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError


@export
class OnlineRegressor(Regressor):
    """
    Base class for an incremental regressor.

    ``fit`` is a single in-order pass of ``learn_one`` over the rows; ``predict`` never mutates state.
    Each instance has a single writer.
    """

    online: ClassVar[bool] = True

    def __init__(self, **hyperparams: Any) -> None:  # noqa: ANN401
        """Store hyperparameters; state is created on the first example."""
        super().__init__(**hyperparams)
        self.updates_seen = 0

    def _ensure_state(self, n_features: int) -> None:
        if self.n_features is None:
            self._init_state(n_features)
            self.n_features = n_features

    def _init_state(self, n_features: int) -> None:
        raise NotImplementedError

    def _fit(self, X: np.ndarray, y: np.ndarray) -> None:
        for x_t, y_t in zip(X, y):
            self.learn_one(x_t, float(y_t))

    def fit(self, X: np.ndarray, y: np.ndarray) -> OnlineRegressor:
        """Learn from each row in order, continuing from the current state."""
        X, y = check_xy(X, y)
        self._ensure_state(X.shape[1])
        self._fit(X, y)
        return self

    def _check_one(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float).ravel()
        self._ensure_state(len(x))
        if len(x) != self.n_features:
            raise DimensionMismatchError(self.n_features or 0, len(x))
        return x

    def predict_one(self, x: np.ndarray) -> float:
        """Predict a single example without changing state."""
        return self._predict_one(self._check_one(x))

    def learn_one(self, x: np.ndarray, y: float) -> None:
        """Update on a single example and count it."""
        x = self._check_one(x)
        self._learn_one(x, float(y))
        self.updates_seen += 1

    def _predict(self, X: np.ndarray) -> np.ndarray:
        return np.array([self._predict_one(x) for x in X])

    def _predict_one(self, x: np.ndarray) -> float:
        raise NotImplementedError

    def _learn_one(self, x: np.ndarray, y: float) -> None:
        raise NotImplementedError

    def get_state(self) -> dict[str, Any]:
        """Fitted parameters plus the update counter."""
        return super().get_state() | {"updates_seen": self.updates_seen}

    def set_state(self, state: dict[str, Any], n_features: int) -> None:
        """Restore a checkpoint; online state arrays stay writable."""
        for name in self.state_fields:
            value = state[name]
            setattr(self, name, np.array(value, dtype=float) if isinstance(value, np.ndarray) else value)
        self.updates_seen = int(state["updates_seen"])
        self.n_features = n_features


@export
def predict(model: RegressorProtocol, X: np.ndarray) -> np.ndarray:
    """Predict with any fitted regressor."""
    return model.predict(X)
