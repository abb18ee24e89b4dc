"""k-nearest-neighbour regression."""

from __future__ import annotations

import numpy as np

from forecast_impact.errors import KTooLargeError, UnsupportedHyperparameterError
from forecast_impact.learners import export
from forecast_impact.learners.utils import Regressor, frozen


# Upper bound on query x train x feature elements held in memory at once
CHUNK_ELEMENTS = 1 << 22


@export
class KNeighborsRegressor(Regressor):
    """Mean target of the k training rows nearest in Euclidean distance; ties go to the lower row index."""

    kind = "knn"
    state_fields = ("train_X", "train_y")

    def __init__(self, k: int = 5) -> None:
        """Set the neighbour count."""
        if k < 1:
            msg = f"k must be at least 1, got {k}"
            raise UnsupportedHyperparameterError(msg)
        super().__init__(k=k)
        self.train_X = np.empty((0, 0))
        self.train_y = np.empty(0)

    def _fit(self, X: np.ndarray, y: np.ndarray) -> None:
        if self.hyperparams["k"] > len(X):
            msg = f"k={self.hyperparams['k']} but only {len(X)} training rows"
            raise KTooLargeError(msg)
        self.train_X = frozen(X)
        self.train_y = frozen(y)

    def neighbors(self, X: np.ndarray) -> np.ndarray:
        """Indices of the k nearest training rows for each query, nearest first."""
        k = self.hyperparams["k"]
        n_train, n_features = self.train_X.shape
        chunk = max(1, CHUNK_ELEMENTS // max(1, n_train * n_features))
        out = np.empty((len(X), k), dtype=np.int64)
        for start in range(0, len(X), chunk):
            queries = X[start : start + chunk]
            distances = ((queries[:, None, :] - self.train_X[None, :, :]) ** 2).sum(axis=2)
            out[start : start + chunk] = np.argsort(distances, axis=1, kind="stable")[:, :k]
        return out

    def _predict(self, X: np.ndarray) -> np.ndarray:
        return self.train_y[self.neighbors(X)].mean(axis=1)


@export
def fit_knn(X: np.ndarray, y: np.ndarray, k: int) -> KNeighborsRegressor:
    """Store the training set for k-nearest-neighbour prediction."""
    return KNeighborsRegressor(k=k).fit(X, y)  # type: ignore[return-value]
