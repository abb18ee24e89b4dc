"""Linear epsilon-insensitive support vector regression in the primal."""

from __future__ import annotations

import logging
from typing import Any

import numpy as np

from forecast_impact.errors import UnsupportedHyperparameterError
from forecast_impact.learners import export
from forecast_impact.learners.utils import Regressor, check_x, frozen


log = logging.getLogger(__name__)


def svr_objective(
    X: np.ndarray,
    y: np.ndarray,
    coef: np.ndarray,
    intercept: float,
    C: float,
    epsilon: float,
) -> float:
    """0.5 * ||w||^2 + C * sum(max(0, |w.x + b - y| - epsilon))."""
    hinge = np.maximum(0.0, np.abs(X @ coef + intercept - y) - epsilon)
    return 0.5 * float(coef @ coef) + C * float(hinge.sum())


@export
class LinearSVR(Regressor):
    """
    Linear-kernel SVR trained by epoch-shuffled mini-batch subgradient descent.

    Training starts from the least-squares solution and keeps the best parameters seen at the
    end of any epoch, so the returned objective never exceeds the starting one. ``gamma`` only
    applies to the rbf kernel, which is not implemented; it is accepted and ignored.
    """

    kind = "linear_svr"
    state_fields = ("coef", "intercept")

    def __init__(  # noqa: PLR0913
        self,
        C: float = 1.0,
        epsilon: float = 0.0,
        kernel: str = "linear",
        gamma: float | None = None,
        epochs: int = 200,
        batch_size: int = 32,
        learning_rate: float = 0.5,
        patience: int = 20,
        tol: float = 1e-10,
        seed: int = 0,
    ) -> None:
        """Set the trade-off, tube width and optimiser settings."""
        if kernel != "linear":
            msg = f"kernel {kernel!r} is not supported; only 'linear' is implemented"
            raise UnsupportedHyperparameterError(msg)
        if C <= 0:
            msg = f"C must be positive, got {C}"
            raise UnsupportedHyperparameterError(msg)
        if epsilon < 0:
            msg = f"epsilon must be non-negative, got {epsilon}"
            raise UnsupportedHyperparameterError(msg)
        super().__init__(
            C=C,
            epsilon=epsilon,
            kernel=kernel,
            gamma=gamma,
            epochs=epochs,
            batch_size=batch_size,
            learning_rate=learning_rate,
            patience=patience,
            tol=tol,
            seed=seed,
        )
        self.coef = np.empty(0)
        self.intercept = 0.0

    def _fit(self, X: np.ndarray, y: np.ndarray) -> None:
        C, epsilon = self.hyperparams["C"], self.hyperparams["epsilon"]
        hp = self.hyperparams
        batch_size, patience, tol = hp["batch_size"], hp["patience"], hp["tol"]
        n = len(y)
        rng = np.random.default_rng(self.hyperparams["seed"])

        design = np.column_stack([X, np.ones(n)])
        start = np.linalg.lstsq(design, y, rcond=None)[0]
        coef, intercept = start[:-1].copy(), float(start[-1])
        initial = best = svr_objective(X, y, coef, intercept, C, epsilon)
        best_coef, best_intercept = coef.copy(), intercept
        history = [initial]
        stalled = 0
        no_improvement = False

        for epoch in range(self.hyperparams["epochs"]):
            step = self.hyperparams["learning_rate"] / (np.sqrt(1.0 + epoch) * (1.0 + C * n))
            order = rng.permutation(n)
            for begin in range(0, n, batch_size):
                batch = order[begin : begin + batch_size]
                residual = X[batch] @ coef + intercept - y[batch]
                sign = np.where(np.abs(residual) > epsilon, np.sign(residual), 0.0)
                scale = C * n / len(batch)
                coef = coef - step * (coef + scale * (sign @ X[batch]))
                intercept -= step * scale * float(sign.sum())
            current = svr_objective(X, y, coef, intercept, C, epsilon)
            history.append(current)
            if current < best - tol:
                best, best_coef, best_intercept = current, coef.copy(), intercept
                stalled = 0
            else:
                stalled += 1
                if stalled >= patience:
                    no_improvement = True
                    log.warning("SVR objective has not improved for %d epochs; keeping best %.6g", patience, best)
                    break

        self.coef = frozen(best_coef)
        self.intercept = best_intercept
        self.diagnostics = {
            "initial_objective": initial,
            "objective": best,
            "epochs_run": len(history) - 1,
            "no_improvement": no_improvement,
        }

    def _predict(self, X: np.ndarray) -> np.ndarray:
        return X @ self.coef + self.intercept

    def objective(self, X: np.ndarray, y: np.ndarray) -> float:
        """Primal objective of the fitted parameters on (X, y)."""
        X = check_x(X, self.n_features)
        y = np.asarray(y, dtype=float)
        return svr_objective(X, y, self.coef, self.intercept, self.hyperparams["C"], self.hyperparams["epsilon"])


@export
def fit_linear_svr(  # noqa: PLR0913
    X: np.ndarray,
    y: np.ndarray,
    C: float = 1.0,
    epsilon: float = 0.0,
    epochs: int = 200,
    seed: int = 0,
    **kwargs: Any,  # noqa: ANN401
) -> LinearSVR:
    """Fit a linear SVR."""
    return LinearSVR(C=C, epsilon=epsilon, epochs=epochs, seed=seed, **kwargs).fit(X, y)  # type: ignore[return-value]
