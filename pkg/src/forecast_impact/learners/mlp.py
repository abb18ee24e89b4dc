"""Fully connected feed-forward networks with a linear output unit."""

from __future__ import annotations

import logging
from typing import Any, Literal

import numpy as np

from forecast_impact.errors import DivergedLossError, UnsupportedHyperparameterError
from forecast_impact.learners import export
from forecast_impact.learners.utils import Regressor, frozen


log = logging.getLogger(__name__)

Activation = Literal["tanh", "relu"]
Params = list[tuple[np.ndarray, np.ndarray]]

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPSILON = 1e-8


def init_params(layer_sizes: list[int], rng: np.random.Generator) -> Params:
    """Uniform weights and biases in +-sqrt(6 / (fan_in + fan_out)) for every layer."""
    params: Params = []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weights = rng.uniform(-bound, bound, (fan_in, fan_out))
        biases = rng.uniform(-bound, bound, fan_out)
        params.append((weights, biases))
    return params


def _activate(z: np.ndarray, activation: Activation) -> np.ndarray:
    return np.tanh(z) if activation == "tanh" else np.maximum(z, 0.0)


def forward(params: Params, X: np.ndarray, activation: Activation) -> tuple[np.ndarray, list[np.ndarray]]:
    """Network output (one value per row) and the layer inputs needed for backpropagation."""
    layer_inputs = [X]
    a = X
    for weights, biases in params[:-1]:
        a = _activate(a @ weights + biases, activation)
        layer_inputs.append(a)
    weights, biases = params[-1]
    return (a @ weights + biases)[:, 0], layer_inputs


def loss_and_grad(
    params: Params,
    X: np.ndarray,
    y: np.ndarray,
    activation: Activation,
    l2_alpha: float,
) -> tuple[float, Params]:
    """
    Loss (1/2m) * sum((yhat - y)^2) + (l2_alpha/2m) * sum(||W||^2) and its gradient.

    Biases are not penalised.
    """
    m = len(y)
    output, layer_inputs = forward(params, X, activation)
    error = output - y
    penalty = sum(float((weights * weights).sum()) for weights, _ in params)
    loss = float(error @ error) / (2.0 * m) + l2_alpha * penalty / (2.0 * m)

    grads: Params = [(np.empty(0), np.empty(0))] * len(params)
    delta = (error / m)[:, None]
    for layer in range(len(params) - 1, -1, -1):
        weights, _ = params[layer]
        a = layer_inputs[layer]
        grads[layer] = (a.T @ delta + l2_alpha * weights / m, delta.sum(axis=0))
        if layer:
            delta = delta @ weights.T
            delta = delta * (1.0 - a * a) if activation == "tanh" else delta * (a > 0)
    return loss, grads


def flatten(params: Params) -> np.ndarray:
    """Concatenate every weight and bias into one vector."""
    return np.concatenate([part.ravel() for layer in params for part in layer])


def unflatten(vector: np.ndarray, like: Params) -> Params:
    """Inverse of flatten, using ``like`` for the shapes."""
    params: Params = []
    offset = 0
    for weights, biases in like:
        w = vector[offset : offset + weights.size].reshape(weights.shape)
        offset += weights.size
        b = vector[offset : offset + biases.size].reshape(biases.shape)
        offset += biases.size
        params.append((w, b))
    return params


def check_network(hidden_sizes: Any, activation: str) -> tuple[int, ...]:  # noqa: ANN401
    """Normalise hidden_sizes (int or sequence) and validate the activation."""
    sizes = (hidden_sizes,) if isinstance(hidden_sizes, int) else tuple(int(size) for size in hidden_sizes)
    if not sizes or min(sizes) < 1:
        msg = f"hidden_sizes must be a non-empty sequence of positive widths, got {hidden_sizes!r}"
        raise UnsupportedHyperparameterError(msg)
    if activation not in ("tanh", "relu"):
        msg = f"activation must be 'tanh' or 'relu', got {activation!r}"
        raise UnsupportedHyperparameterError(msg)
    return sizes


@export
class MLPRegressor(Regressor):
    """Multilayer perceptron trained by mini-batch backpropagation with Adam or plain SGD."""

    kind = "mlp"

    def __init__(  # noqa: PLR0913
        self,
        hidden_sizes: int | tuple[int, ...] = (100,),
        activation: Activation = "relu",
        l2_alpha: float = 1e-4,
        learning_rate: float = 1e-3,
        epochs: int = 200,
        batch_size: int = 200,
        solver: Literal["adam", "sgd"] = "adam",
        seed: int = 0,
    ) -> None:
        """Set the architecture and optimiser."""
        sizes = check_network(hidden_sizes, activation)
        if solver not in ("adam", "sgd"):
            msg = f"solver must be 'adam' or 'sgd', got {solver!r}"
            raise UnsupportedHyperparameterError(msg)
        super().__init__(
            hidden_sizes=sizes,
            activation=activation,
            l2_alpha=l2_alpha,
            learning_rate=learning_rate,
            epochs=epochs,
            batch_size=batch_size,
            solver=solver,
            seed=seed,
        )
        self.params: Params = []

    def initial_params(self, n_features: int) -> tuple[Params, np.random.Generator]:
        """Seeded initial weights and the generator that continues to drive shuffling."""
        rng = np.random.default_rng(self.hyperparams["seed"])
        return init_params([n_features, *self.hyperparams["hidden_sizes"], 1], rng), rng

    def _fit(self, X: np.ndarray, y: np.ndarray) -> None:
        activation, l2_alpha = self.hyperparams["activation"], self.hyperparams["l2_alpha"]
        rate = self.hyperparams["learning_rate"]
        adam = self.hyperparams["solver"] == "adam"
        params, rng = self.initial_params(X.shape[1])
        vector = flatten(params)
        first, second = np.zeros_like(vector), np.zeros_like(vector)
        batch_size = max(1, min(self.hyperparams["batch_size"], len(y)))
        loss_curve: list[float] = []
        step = 0

        for epoch in range(self.hyperparams["epochs"]):
            order = rng.permutation(len(y))
            epoch_loss = 0.0
            for begin in range(0, len(y), batch_size):
                batch = order[begin : begin + batch_size]
                loss, grads = loss_and_grad(unflatten(vector, params), X[batch], y[batch], activation, l2_alpha)
                if not np.isfinite(loss):
                    msg = f"MLP loss became non-finite in epoch {epoch}"
                    raise DivergedLossError(msg, {"epoch": epoch, "loss_curve": loss_curve})
                epoch_loss += loss * len(batch)
                gradient = flatten(grads)
                step += 1
                if adam:
                    first = ADAM_BETA1 * first + (1.0 - ADAM_BETA1) * gradient
                    second = ADAM_BETA2 * second + (1.0 - ADAM_BETA2) * gradient * gradient
                    corrected = rate * np.sqrt(1.0 - ADAM_BETA2**step) / (1.0 - ADAM_BETA1**step)
                    vector = vector - corrected * first / (np.sqrt(second) + ADAM_EPSILON)
                else:
                    vector = vector - rate * gradient
            loss_curve.append(epoch_loss / len(y))

        self.params = [(frozen(w), frozen(b)) for w, b in unflatten(vector, params)]
        self.diagnostics = {"loss_curve": loss_curve}

    def _predict(self, X: np.ndarray) -> np.ndarray:
        return forward(self.params, X, self.hyperparams["activation"])[0]

    def loss_and_grad(self, X: np.ndarray, y: np.ndarray) -> tuple[float, np.ndarray]:
        """Training loss and flattened gradient at the current weights."""
        loss, grads = loss_and_grad(self.params, X, y, self.hyperparams["activation"], self.hyperparams["l2_alpha"])
        return loss, flatten(grads)

    def get_state(self) -> dict[str, Any]:
        """Per-layer weights and biases."""
        return {"weights": [w for w, _ in self.params], "biases": [b for _, b in self.params]}

    def set_state(self, state: dict[str, Any], n_features: int) -> None:
        """Restore per-layer weights and biases."""
        self.params = [(frozen(w), frozen(b)) for w, b in zip(state["weights"], state["biases"])]
        self.n_features = n_features


@export
def fit_mlp(  # noqa: PLR0913
    X: np.ndarray,
    y: np.ndarray,
    hidden_sizes: int | tuple[int, ...] = (100,),
    activation: Activation = "relu",
    l2_alpha: float = 1e-4,
    learning_rate: float = 1e-3,
    epochs: int = 200,
    batch_size: int = 200,
    seed: int = 0,
    **kwargs: Any,  # noqa: ANN401
) -> MLPRegressor:
    """Fit a multilayer perceptron."""
    return MLPRegressor(  # type: ignore[return-value]
        hidden_sizes=hidden_sizes,
        activation=activation,
        l2_alpha=l2_alpha,
        learning_rate=learning_rate,
        epochs=epochs,
        batch_size=batch_size,
        seed=seed,
        **kwargs,
    ).fit(X, y)
