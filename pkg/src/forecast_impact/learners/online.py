"""Incremental regressors updated one example at a time."""

from __future__ import annotations

import logging
from typing import Any, Literal

import numpy as np

from forecast_impact.errors import (
    DivergedLossError,
    NonFiniteUpdateError,
    NonPositiveTargetError,
    UnsupportedHyperparameterError,
)
from forecast_impact.learners import export
from forecast_impact.learners.mlp import Activation, Params, check_network, forward, init_params, loss_and_grad
from forecast_impact.learners.utils import OnlineRegressor


log = logging.getLogger(__name__)


@export
def boxcox_transform(y: float | np.ndarray, power: float) -> float | np.ndarray:
    """(y**power - 1) / power, or ln(y) when power is 0."""
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0):
        msg = f"Box-Cox needs strictly positive targets, got minimum {y.min()}"
        raise NonPositiveTargetError(msg)
    z = np.log(y) if power == 0 else np.expm1(power * np.log(y)) / power
    return float(z) if z.ndim == 0 else z


def boxcox_inverse_clamped(z: float, power: float) -> tuple[float, bool]:
    """Inverse transform; values outside the domain (1 + power*z <= 0) are clamped to its boundary."""
    if power == 0:
        return float(np.exp(z)), False
    base = power * z
    if base <= -1.0:
        return (0.0 if power > 0 else float("inf")), True
    return float(np.exp(np.log1p(base) / power)), False


@export
def boxcox_inverse(z: float | np.ndarray, power: float) -> float | np.ndarray:
    """Exact inverse of boxcox_transform."""
    z = np.asarray(z, dtype=float)
    y = np.exp(z) if power == 0 else np.exp(np.log1p(power * z) / power)
    return float(y) if y.ndim == 0 else y


@export
class OnlineLinearRegressor(OnlineRegressor):
    """Constant-step stochastic gradient descent on squared loss."""

    kind = "online_linear"
    state_fields = ("coef", "intercept")

    def __init__(self, eta: float = 0.01) -> None:
        """Set the step size."""
        if eta < 0:
            msg = f"eta must be non-negative, got {eta}"
            raise UnsupportedHyperparameterError(msg)
        super().__init__(eta=eta)
        self.coef = np.empty(0)
        self.intercept = 0.0

    def _init_state(self, n_features: int) -> None:
        self.coef = np.zeros(n_features)
        self.intercept = 0.0

    def _predict_one(self, x: np.ndarray) -> float:
        return float(self.coef @ x + self.intercept)

    def _step(self, x: np.ndarray, y: float) -> None:
        eta = self.hyperparams["eta"]
        error = float(self.coef @ x + self.intercept) - y
        coef = self.coef - eta * error * x
        intercept = self.intercept - eta * error
        if not (np.all(np.isfinite(coef)) and np.isfinite(intercept)):
            msg = f"online linear update diverged after {self.updates_seen} updates"
            raise NonFiniteUpdateError(msg, {"updates_seen": self.updates_seen, "error": error})
        self.coef, self.intercept = coef, float(intercept)

    def _learn_one(self, x: np.ndarray, y: float) -> None:
        self._step(x, y)


@export
class BoxCoxRegressor(OnlineLinearRegressor):
    """
    Online linear regression on Box-Cox transformed targets.

    Predictions are mapped back to original units. An inner prediction outside the
    transform's domain is clamped to the boundary and logged; use ``predict_one_flagged``
    to see the flag.
    """

    kind = "boxcox"

    def __init__(self, power: float = 0.1, eta: float = 0.01) -> None:
        """Set the power and the inner step size."""
        super().__init__(eta=eta)
        self.hyperparams = {"power": power, "eta": eta}

    def _flagged(self, x: np.ndarray) -> tuple[float, bool]:
        z = super()._predict_one(x)
        value, clamped = boxcox_inverse_clamped(z, self.hyperparams["power"])
        if clamped:
            log.warning("Box-Cox inner prediction %.6g is outside the transform domain; clamped", z)
        return value, clamped

    def predict_one_flagged(self, x: np.ndarray) -> tuple[float, bool]:
        """Prediction in original units and whether it was clamped."""
        return self._flagged(self._check_one(x))

    def _predict_one(self, x: np.ndarray) -> float:
        return self._flagged(x)[0]

    def _learn_one(self, x: np.ndarray, y: float) -> None:
        self._step(x, float(boxcox_transform(y, self.hyperparams["power"])))


@export
class PassiveAggressiveRegressor(OnlineRegressor):
    """
    Epsilon-insensitive Passive-Aggressive regression.

    The intercept, when fitted, is treated as a weight on a constant-1 feature. ``max_iter``,
    ``shuffle`` and ``tol`` are accepted for grid compatibility and have no effect on a
    single online pass.
    """

    kind = "passive_aggressive"
    state_fields = ("coef", "intercept")

    def __init__(  # noqa: PLR0913
        self,
        C: float = 1.0,
        epsilon: float = 0.1,
        fit_intercept: bool = True,  # noqa: FBT001, FBT002
        variant: Literal["pa1", "pa2"] = "pa1",
        max_iter: int = 1,
        shuffle: bool = False,  # noqa: FBT001, FBT002
        tol: float = 1e-3,
    ) -> None:
        """Set aggressiveness, insensitivity and intercept handling."""
        if C <= 0:
            msg = f"C must be positive, got {C}"
            raise UnsupportedHyperparameterError(msg)
        if epsilon < 0:
            msg = f"epsilon must be non-negative, got {epsilon}"
            raise UnsupportedHyperparameterError(msg)
        if variant not in ("pa1", "pa2"):
            msg = f"variant must be 'pa1' or 'pa2', got {variant!r}"
            raise UnsupportedHyperparameterError(msg)
        super().__init__(
            C=C,
            epsilon=epsilon,
            fit_intercept=fit_intercept,
            variant=variant,
            max_iter=max_iter,
            shuffle=shuffle,
            tol=tol,
        )
        self.coef = np.empty(0)
        self.intercept = 0.0

    def _init_state(self, n_features: int) -> None:
        self.coef = np.zeros(n_features)
        self.intercept = 0.0

    def _predict_one(self, x: np.ndarray) -> float:
        return float(self.coef @ x + self.intercept)

    def _learn_one(self, x: np.ndarray, y: float) -> None:
        C, epsilon = self.hyperparams["C"], self.hyperparams["epsilon"]
        fit_intercept = self.hyperparams["fit_intercept"]
        error = y - self._predict_one(x)
        loss = abs(error) - epsilon
        if loss <= 0:
            return
        squared_norm = float(x @ x) + (1.0 if fit_intercept else 0.0)
        if squared_norm == 0:
            log.warning("Passive-Aggressive skipped a zero-norm input with loss %.6g", loss)
            return
        if self.hyperparams["variant"] == "pa1":
            tau = min(C, loss / squared_norm)
        else:
            tau = loss / (squared_norm + 1.0 / (2.0 * C))
        step = np.sign(error) * tau
        self.coef = self.coef + step * x
        if fit_intercept:
            self.intercept = float(self.intercept + step)


@export
class OnlineMLPRegressor(OnlineRegressor):
    """Multilayer perceptron taking one backpropagation step per example."""

    kind = "online_mlp"

    def __init__(
        self,
        hidden_sizes: int | tuple[int, ...] = (10,),
        activation: Activation = "relu",
        l2_alpha: float = 1e-4,
        learning_rate: float = 0.01,
        seed: int = 0,
    ) -> None:
        """Set the architecture and step size."""
        sizes = check_network(hidden_sizes, activation)
        super().__init__(
            hidden_sizes=sizes,
            activation=activation,
            l2_alpha=l2_alpha,
            learning_rate=learning_rate,
            seed=seed,
        )
        self.params: Params = []

    def _init_state(self, n_features: int) -> None:
        rng = np.random.default_rng(self.hyperparams["seed"])
        self.params = init_params([n_features, *self.hyperparams["hidden_sizes"], 1], rng)

    def _predict_one(self, x: np.ndarray) -> float:
        return float(forward(self.params, x[None, :], self.hyperparams["activation"])[0][0])

    def loss_and_grad(self, x: np.ndarray, y: float) -> tuple[float, Params]:
        """Single-example loss and per-layer gradients at the current weights."""
        x = self._check_one(x)
        return loss_and_grad(
            self.params,
            x[None, :],
            np.array([y]),
            self.hyperparams["activation"],
            self.hyperparams["l2_alpha"],
        )

    def _learn_one(self, x: np.ndarray, y: float) -> None:
        loss, grads = self.loss_and_grad(x, y)
        rate = self.hyperparams["learning_rate"]
        params = [(w - rate * gw, b - rate * gb) for (w, b), (gw, gb) in zip(self.params, grads)]
        if not np.isfinite(loss) or not all(np.all(np.isfinite(w)) and np.all(np.isfinite(b)) for w, b in params):
            msg = f"online MLP loss became non-finite after {self.updates_seen} updates"
            raise DivergedLossError(msg, {"updates_seen": self.updates_seen, "loss": loss})
        self.params = params

    def get_state(self) -> dict[str, Any]:
        """Per-layer weights and biases plus the update counter."""
        return {
            "weights": [w for w, _ in self.params],
            "biases": [b for _, b in self.params],
            "updates_seen": self.updates_seen,
        }

    def set_state(self, state: dict[str, Any], n_features: int) -> None:
        """Restore a checkpoint."""
        self.params = [
            (np.array(w, dtype=float), np.array(b, dtype=float)) for w, b in zip(state["weights"], state["biases"])
        ]
        self.updates_seen = int(state["updates_seen"])
        self.n_features = n_features
