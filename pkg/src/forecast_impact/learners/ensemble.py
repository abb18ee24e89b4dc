"""Tree ensembles: random forest, extra trees, AdaBoost.R2 and squared-loss gradient boosting."""

from __future__ import annotations

import logging
from typing import TYPE_CHECKING, Any

import numpy as np

from forecast_impact.errors import UnsupportedHyperparameterError
from forecast_impact.learners import export
from forecast_impact.learners.tree import TreeRegressor
from forecast_impact.learners.utils import Regressor, check_x, frozen


if TYPE_CHECKING:
    from collections.abc import Iterator


log = logging.getLogger(__name__)


def _check_estimators(n_estimators: int) -> None:
    if n_estimators < 1:
        msg = f"n_estimators must be at least 1, got {n_estimators}"
        raise UnsupportedHyperparameterError(msg)


class TreeEnsemble(Regressor):
    """Shared state handling for ensembles of TreeRegressor."""

    def __init__(self, **hyperparams: Any) -> None:  # noqa: ANN401
        """Store hyperparameters."""
        _check_estimators(hyperparams["n_estimators"])
        super().__init__(**hyperparams)
        self.trees: list[TreeRegressor] = []

    def _tree(self, **overrides: Any) -> TreeRegressor:  # noqa: ANN401
        params = {
            "min_samples_leaf": self.hyperparams.get("min_samples_leaf", 1),
            "max_depth": self.hyperparams.get("max_depth"),
            "features_per_split": self.hyperparams.get("features_per_split"),
        }
        return TreeRegressor(**(params | overrides))

    def get_state(self) -> dict[str, Any]:
        """Tree states in stage order."""
        return {"trees": [tree.get_state() for tree in self.trees]}

    def set_state(self, state: dict[str, Any], n_features: int) -> None:
        """Rebuild the trees from their states."""
        self.trees = []
        for tree_state in state["trees"]:
            tree = self._tree()
            tree.set_state(tree_state, n_features)
            self.trees.append(tree)
        self.n_features = n_features


@export
class ForestRegressor(TreeEnsemble):
    """
    Random forest: each tree sees a bootstrap sample and searches a random subset of features.

    Prediction is the mean of the tree outputs.
    """

    kind = "random_forest"
    bootstrap = True
    split_mode = "exhaustive"

    def __init__(
        self,
        n_estimators: int = 16,
        features_per_split: int | float | None = 1 / 3,
        min_samples_leaf: int = 1,
        max_depth: int | None = None,
        seed: int = 0,
    ) -> None:
        """Set the forest size and per-tree growth parameters."""
        super().__init__(
            n_estimators=n_estimators,
            features_per_split=features_per_split,
            min_samples_leaf=min_samples_leaf,
            max_depth=max_depth,
            seed=seed,
        )

    def _tree(self, **overrides: Any) -> TreeRegressor:  # noqa: ANN401
        return super()._tree(split_mode=self.split_mode, **overrides)

    def _fit(self, X: np.ndarray, y: np.ndarray) -> None:
        rng = np.random.default_rng(self.hyperparams["seed"])
        self.trees = []
        for _ in range(self.hyperparams["n_estimators"]):
            if self.bootstrap:
                rows = rng.integers(0, len(y), len(y))
                self.trees.append(self._tree().grow(X[rows], y[rows], rng))
            else:
                self.trees.append(self._tree().grow(X, y, rng))

    def _predict(self, X: np.ndarray) -> np.ndarray:
        return np.mean([tree.predict(X) for tree in self.trees], axis=0)


class ExtraTreesRegressor(ForestRegressor):
    """Extremely randomised trees: full sample, one uniform cut-point per candidate feature."""

    kind = "extra_trees"
    bootstrap = False
    split_mode = "random"

    def __init__(
        self,
        n_estimators: int = 16,
        features_per_split: int | float | None = None,
        min_samples_leaf: int = 1,
        max_depth: int | None = None,
        seed: int = 0,
    ) -> None:
        """Extra trees consider every feature by default."""
        super().__init__(n_estimators, features_per_split, min_samples_leaf, max_depth, seed)


@export
class AdaBoostRegressor(TreeEnsemble):
    """
    AdaBoost.R2 with linear per-stage loss.

    Each stage fits a tree to a weighted resample, stages are combined by weighted median.
    Boosting stops early on a perfect stage or once the average loss reaches 0.5.
    """

    kind = "adaboost"

    def __init__(
        self,
        n_estimators: int = 16,
        max_depth: int | None = 3,
        min_samples_leaf: int = 1,
        seed: int = 0,
    ) -> None:
        """Set the stage count and base tree parameters."""
        super().__init__(n_estimators=n_estimators, max_depth=max_depth, min_samples_leaf=min_samples_leaf, seed=seed)
        self.stage_weights = np.empty(0)

    def _fit(self, X: np.ndarray, y: np.ndarray) -> None:
        rng = np.random.default_rng(self.hyperparams["seed"])
        n = len(y)
        sample_weight = np.full(n, 1.0 / n)
        self.trees = []
        stage_weights: list[float] = []
        degenerate = False
        for stage in range(self.hyperparams["n_estimators"]):
            rows = rng.choice(n, size=n, replace=True, p=sample_weight)
            tree = self._tree().grow(X[rows], y[rows], rng)
            error = np.abs(tree.predict(X) - y)
            max_error = error.max()
            if max_error == 0:
                self.trees.append(tree)
                stage_weights.append(1.0)
                break
            loss = error / max_error
            average_loss = float(sample_weight @ loss)
            if average_loss >= 0.5:  # noqa: PLR2004
                if not self.trees:
                    self.trees.append(tree)
                    stage_weights.append(1.0)
                    degenerate = True
                    log.warning("AdaBoost first stage has average loss %.3f >= 0.5; keeping one stage", average_loss)
                break
            beta = average_loss / (1.0 - average_loss)
            self.trees.append(tree)
            stage_weights.append(float(np.log(1.0 / beta)))
            if stage < self.hyperparams["n_estimators"] - 1:
                sample_weight = sample_weight * beta ** (1.0 - loss)
                sample_weight /= sample_weight.sum()
        self.stage_weights = frozen(stage_weights)
        self.diagnostics = {"n_stages": len(self.trees), "degenerate_stage": degenerate}

    def _predict(self, X: np.ndarray) -> np.ndarray:
        predictions = np.column_stack([tree.predict(X) for tree in self.trees])
        order = np.argsort(predictions, axis=1, kind="stable")
        cumulative = np.cumsum(self.stage_weights[order], axis=1)
        median = (cumulative >= 0.5 * cumulative[:, -1:]).argmax(axis=1)
        rows = np.arange(len(X))
        return predictions[rows, order[rows, median]]

    def get_state(self) -> dict[str, Any]:
        """Tree states plus stage weights."""
        return super().get_state() | {"stage_weights": self.stage_weights}

    def set_state(self, state: dict[str, Any], n_features: int) -> None:
        """Rebuild stages and their weights."""
        super().set_state(state, n_features)
        self.stage_weights = frozen(state["stage_weights"])


@export
class GradientBoostingRegressor(TreeEnsemble):
    """Squared-loss gradient boosting: each stage fits a tree to the current residuals."""

    kind = "gradient_boosting"

    def __init__(
        self,
        n_estimators: int = 16,
        learning_rate: float = 0.1,
        max_depth: int | None = 3,
        min_samples_leaf: int = 1,
        seed: int = 0,
    ) -> None:
        """Set the stage count, shrinkage and base tree parameters."""
        if learning_rate <= 0:
            msg = f"learning_rate must be positive, got {learning_rate}"
            raise UnsupportedHyperparameterError(msg)
        super().__init__(
            n_estimators=n_estimators,
            learning_rate=learning_rate,
            max_depth=max_depth,
            min_samples_leaf=min_samples_leaf,
            seed=seed,
        )
        self.init = 0.0

    def _fit(self, X: np.ndarray, y: np.ndarray) -> None:
        rng = np.random.default_rng(self.hyperparams["seed"])
        rate = self.hyperparams["learning_rate"]
        self.init = float(y.mean())
        current = np.full(len(y), self.init)
        self.trees = []
        train_mse: list[float] = []
        for _ in range(self.hyperparams["n_estimators"]):
            tree = self._tree().grow(X, y - current, rng)
            current = current + rate * tree.predict(X)
            self.trees.append(tree)
            train_mse.append(float(np.mean((y - current) ** 2)))
        self.diagnostics = {"train_mse": train_mse}

    def staged_predict(self, X: np.ndarray) -> Iterator[np.ndarray]:
        """Yield the prediction after each stage."""
        X = check_x(X, self.n_features)
        current = np.full(len(X), self.init)
        for tree in self.trees:
            current = current + self.hyperparams["learning_rate"] * tree.predict(X)
            yield current

    def _predict(self, X: np.ndarray) -> np.ndarray:
        prediction = np.full(len(X), self.init)
        for tree in self.trees:
            prediction = prediction + self.hyperparams["learning_rate"] * tree.predict(X)
        return prediction

    def get_state(self) -> dict[str, Any]:
        """Tree states plus the initial constant."""
        return super().get_state() | {"init": self.init}

    def set_state(self, state: dict[str, Any], n_features: int) -> None:
        """Rebuild stages and the initial constant."""
        super().set_state(state, n_features)
        self.init = float(state["init"])


@export
def fit_random_forest(
    X: np.ndarray,
    y: np.ndarray,
    n_estimators: int = 16,
    features_per_split: int | float | None = 1 / 3,
    seed: int = 0,
    **kwargs: Any,  # noqa: ANN401
) -> ForestRegressor:
    """Fit a bootstrap-aggregated forest with feature bagging."""
    model = ForestRegressor(n_estimators=n_estimators, features_per_split=features_per_split, seed=seed, **kwargs)
    return model.fit(X, y)  # type: ignore[return-value]


@export
def fit_extra_trees(
    X: np.ndarray,
    y: np.ndarray,
    n_estimators: int = 16,
    features_per_split: int | float | None = None,
    seed: int = 0,
    **kwargs: Any,  # noqa: ANN401
) -> ForestRegressor:
    """Fit extremely randomised trees on the full sample."""
    model = ExtraTreesRegressor(n_estimators=n_estimators, features_per_split=features_per_split, seed=seed, **kwargs)
    return model.fit(X, y)  # type: ignore[return-value]


@export
def fit_adaboost(X: np.ndarray, y: np.ndarray, n_estimators: int = 16, **kwargs: Any) -> AdaBoostRegressor:  # noqa: ANN401
    """Fit AdaBoost.R2."""
    return AdaBoostRegressor(n_estimators=n_estimators, **kwargs).fit(X, y)  # type: ignore[return-value]


@export
def fit_gradient_boosting(
    X: np.ndarray,
    y: np.ndarray,
    n_estimators: int = 16,
    learning_rate: float = 0.1,
    **kwargs: Any,  # noqa: ANN401
) -> GradientBoostingRegressor:
    """Fit squared-loss gradient boosting."""
    model = GradientBoostingRegressor(n_estimators=n_estimators, learning_rate=learning_rate, **kwargs)
    return model.fit(X, y)  # type: ignore[return-value]
