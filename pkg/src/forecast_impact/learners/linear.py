"""Least squares, ridge, lasso and elastic net."""

from __future__ import annotations

import logging
from typing import Any

import numpy as np

from forecast_impact.errors import NoConvergenceError, SingularDesignError, UnsupportedHyperparameterError
from forecast_impact.learners import export
from forecast_impact.learners.utils import Regressor, check_x, frozen


log = logging.getLogger(__name__)


def _center(X: np.ndarray, y: np.ndarray, fit_intercept: bool) -> tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    if not fit_intercept:
        return X, y, np.zeros(X.shape[1]), 0.0
    x_mean, y_mean = X.mean(axis=0), float(y.mean())
    return X - x_mean, y - y_mean, x_mean, y_mean


@export
class LinearRegressor(Regressor):
    """Ordinary least squares, or ridge when ``lam`` > 0; the intercept is never penalised."""

    kind = "ridge"
    state_fields = ("coef", "intercept")

    def __init__(self, lam: float = 0.0, fit_intercept: bool = True) -> None:  # noqa: FBT001, FBT002
        """Set the ridge penalty."""
        if lam < 0:
            msg = f"lam must be non-negative, got {lam}"
            raise UnsupportedHyperparameterError(msg)
        super().__init__(lam=lam, fit_intercept=fit_intercept)
        self.coef = np.empty(0)
        self.intercept = 0.0

    def _fit(self, X: np.ndarray, y: np.ndarray) -> None:
        lam: float = self.hyperparams.get("lam", 0.0)
        fit_intercept: bool = self.hyperparams["fit_intercept"]
        if lam == 0:
            design = np.column_stack([np.ones(len(X)), X]) if fit_intercept else X
            rank = np.linalg.matrix_rank(design)
            if rank < design.shape[1]:
                msg = f"design matrix has rank {rank} but {design.shape[1]} columns; use lam > 0"
                raise SingularDesignError(msg)
            solution = np.linalg.lstsq(design, y, rcond=None)[0]
            coef, intercept = (solution[1:], float(solution[0])) if fit_intercept else (solution, 0.0)
        else:
            Xc, yc, x_mean, y_mean = _center(X, y, fit_intercept)
            augmented = np.vstack([Xc, np.sqrt(lam) * np.eye(X.shape[1])])
            target = np.concatenate([yc, np.zeros(X.shape[1])])
            coef = np.linalg.lstsq(augmented, target, rcond=None)[0]
            intercept = y_mean - float(x_mean @ coef)
        self.coef = frozen(coef)
        self.intercept = intercept

    def _predict(self, X: np.ndarray) -> np.ndarray:
        return X @ self.coef + self.intercept


class OLSRegressor(LinearRegressor):
    """Ordinary least squares with an explicit intercept column."""

    kind = "ols"

    def __init__(self, fit_intercept: bool = True) -> None:  # noqa: FBT001, FBT002
        """Least squares is ridge without a penalty."""
        Regressor.__init__(self, fit_intercept=fit_intercept)
        self.coef = np.empty(0)
        self.intercept = 0.0


def soft_threshold(value: float, threshold: float) -> float:
    """Shrink a value towards zero by ``threshold``."""
    if value > threshold:
        return value - threshold
    if value < -threshold:
        return value + threshold
    return 0.0


@export
class CoordinateDescentRegressor(Regressor):
    """
    Elastic net by cyclic coordinate descent.

    Minimises (1/2n)||y - Xb - c||^2 + lam * (l1_ratio * ||b||_1 + (1 - l1_ratio) / 2 * ||b||^2) with an
    unpenalised intercept c. ``l1_ratio`` = 1 is the lasso. Sweeps stop once the largest coefficient
    change falls below ``tol``.
    """

    kind = "elastic_net"
    state_fields = ("coef", "intercept")

    def __init__(  # noqa: PLR0913
        self,
        lam: float = 0.01,
        l1_ratio: float = 0.5,
        tol: float = 1e-6,
        max_iter: int = 10000,
        fit_intercept: bool = True,  # noqa: FBT001, FBT002
        strict: bool = False,  # noqa: FBT001, FBT002
    ) -> None:
        """Set the penalty and solver limits."""
        if lam < 0:
            msg = f"lam must be non-negative, got {lam}"
            raise UnsupportedHyperparameterError(msg)
        if not 0 <= l1_ratio <= 1:
            msg = f"l1_ratio must be within [0, 1], got {l1_ratio}"
            raise UnsupportedHyperparameterError(msg)
        super().__init__(
            lam=lam,
            l1_ratio=l1_ratio,
            tol=tol,
            max_iter=max_iter,
            fit_intercept=fit_intercept,
            strict=strict,
        )
        self.coef = np.empty(0)
        self.intercept = 0.0

    def _fit(self, X: np.ndarray, y: np.ndarray) -> None:
        lam, l1_ratio = self.hyperparams["lam"], self.l1_ratio
        tol, max_iter = self.hyperparams["tol"], self.hyperparams["max_iter"]
        Xc, yc, x_mean, y_mean = _center(X, y, self.hyperparams["fit_intercept"])
        n, p = Xc.shape
        gram = Xc.T @ Xc / n
        corr = Xc.T @ yc / n
        l1, l2 = lam * l1_ratio, lam * (1.0 - l1_ratio)

        coef = np.zeros(p)
        max_change = np.inf
        sweeps = 0
        while sweeps < max_iter:
            sweeps += 1
            max_change = 0.0
            for j in range(p):
                denominator = gram[j, j] + l2
                if denominator == 0:
                    continue
                old = coef[j]
                rho = corr[j] - gram[j] @ coef + gram[j, j] * old
                coef[j] = soft_threshold(rho, l1) / denominator
                max_change = max(max_change, abs(coef[j] - old))
            if max_change < tol:
                break

        converged = max_change < tol
        self.coef = frozen(coef)
        self.intercept = y_mean - float(x_mean @ coef)
        self.diagnostics = {
            "converged": converged,
            "sweeps": sweeps,
            "max_change": float(max_change),
            "objective": self.objective(X, y),
        }
        if not converged:
            msg = f"{self.kind} did not converge in {sweeps} sweeps (last change {max_change:.3g})"
            if self.hyperparams["strict"]:
                raise NoConvergenceError(msg, self.diagnostics)
            log.warning(msg)

    @property
    def l1_ratio(self) -> float:
        """Share of the penalty on the L1 norm."""
        return self.hyperparams.get("l1_ratio", 1.0)

    def _predict(self, X: np.ndarray) -> np.ndarray:
        return X @ self.coef + self.intercept

    def objective(
        self,
        X: np.ndarray,
        y: np.ndarray,
        coef: np.ndarray | None = None,
        intercept: float | None = None,
    ) -> float:
        """Penalised loss at the fitted parameters, or at the ones given."""
        X = check_x(X)
        coef = self.coef if coef is None else np.asarray(coef, dtype=float)
        intercept = self.intercept if intercept is None else intercept
        lam, l1_ratio = self.hyperparams["lam"], self.l1_ratio
        residual = np.asarray(y, dtype=float) - X @ coef - intercept
        penalty = lam * (l1_ratio * np.abs(coef).sum() + (1.0 - l1_ratio) / 2.0 * float(coef @ coef))
        return float(residual @ residual) / (2.0 * len(residual)) + penalty


class LassoRegressor(CoordinateDescentRegressor):
    """Elastic net with a pure L1 penalty."""

    kind = "lasso"

    def __init__(  # noqa: PLR0913
        self,
        lam: float = 0.01,
        tol: float = 1e-6,
        max_iter: int = 10000,
        fit_intercept: bool = True,  # noqa: FBT001, FBT002
        strict: bool = False,  # noqa: FBT001, FBT002
    ) -> None:
        """Set the L1 penalty and solver limits."""
        super().__init__(lam=lam, l1_ratio=1.0, tol=tol, max_iter=max_iter, fit_intercept=fit_intercept, strict=strict)
        del self.hyperparams["l1_ratio"]


@export
def fit_ols(X: np.ndarray, y: np.ndarray, fit_intercept: bool = True) -> LinearRegressor:  # noqa: FBT001, FBT002
    """Fit ordinary least squares."""
    return OLSRegressor(fit_intercept=fit_intercept).fit(X, y)  # type: ignore[return-value]


@export
def fit_ridge(X: np.ndarray, y: np.ndarray, lam: float, fit_intercept: bool = True) -> LinearRegressor:  # noqa: FBT001, FBT002
    """Fit ridge regression with penalty ``lam``."""
    return LinearRegressor(lam=lam, fit_intercept=fit_intercept).fit(X, y)  # type: ignore[return-value]


@export
def fit_lasso(X: np.ndarray, y: np.ndarray, lam: float, **kwargs: Any) -> CoordinateDescentRegressor:  # noqa: ANN401
    """Fit the lasso by coordinate descent."""
    return LassoRegressor(lam=lam, **kwargs).fit(X, y)  # type: ignore[return-value]


@export
def fit_elastic_net(
    X: np.ndarray,
    y: np.ndarray,
    lam: float,
    l1_ratio: float,
    **kwargs: Any,  # noqa: ANN401
) -> CoordinateDescentRegressor:
    """Fit the elastic net by coordinate descent."""
    return CoordinateDescentRegressor(lam=lam, l1_ratio=l1_ratio, **kwargs).fit(X, y)  # type: ignore[return-value]
