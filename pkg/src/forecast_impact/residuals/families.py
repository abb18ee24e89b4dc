"""Closed-form distribution families for forecast residuals, built on scipy.stats."""

from __future__ import annotations

import logging
from collections.abc import Callable
from dataclasses import dataclass
from typing import Any, Literal

import numpy as np
from scipy import stats

from forecast_impact.errors import UnsupportedFamilyError
from forecast_impact.residuals import export


log = logging.getLogger(__name__)

# How an unconstrained optimiser coordinate maps onto a parameter
Constraint = Literal["real", "positive", "below_min", "covers_max"]

EULER_GAMMA = 0.5772156649015329


@dataclass(frozen=True)
class Family:
    """
    One distribution family.

    Parameters follow the scipy order: shapes, then loc, then scale. ``closed_form`` gives the
    maximum likelihood estimate directly; otherwise ``initial`` seeds a simplex search on
    standardised data under the per-parameter ``constraints``.
    """

    name: str
    dist: Any
    param_names: tuple[str, ...]
    constraints: tuple[Constraint, ...]
    initial: Callable[[np.ndarray], tuple[float, ...]] | None = None
    closed_form: Callable[[np.ndarray], tuple[float, ...]] | None = None

    @property
    def n_params(self) -> int:
        """Number of fitted parameters."""
        return len(self.param_names)

    def freeze(self, params: tuple[float, ...]) -> Any:  # noqa: ANN401
        """A scipy frozen distribution."""
        return self.dist(*params)

    def decode(self, theta: np.ndarray, z: np.ndarray) -> tuple[float, ...]:
        """Optimiser coordinates to parameters, keeping bounded supports around the data."""
        params: list[float] = []
        loc = 0.0
        for name, kind, value in zip(self.param_names, self.constraints, theta):
            if kind == "real":
                param = float(value)
            elif kind == "positive":
                param = float(np.exp(value))
            elif kind == "below_min":
                param = float(z.min() - np.exp(value))
            else:
                param = float(z.max() - loc + np.exp(value))
            if name == "loc":
                loc = param
            params.append(param)
        return tuple(params)

    def encode(self, params: tuple[float, ...], z: np.ndarray) -> np.ndarray:
        """Inverse of decode."""
        theta: list[float] = []
        loc = 0.0
        for name, kind, param in zip(self.param_names, self.constraints, params):
            if kind == "real":
                theta.append(param)
            elif kind == "positive":
                theta.append(np.log(param))
            elif kind == "below_min":
                theta.append(np.log(z.min() - param))
            else:
                theta.append(np.log(loc + param - z.max()))
            if name == "loc":
                loc = param
        return np.array(theta)


def _normal(x: np.ndarray) -> tuple[float, ...]:
    return float(x.mean()), float(x.std())


def _uniform(x: np.ndarray) -> tuple[float, ...]:
    return float(x.min()), float(x.max() - x.min())


def _laplace(x: np.ndarray) -> tuple[float, ...]:
    median = float(np.median(x))
    return median, float(np.mean(np.abs(x - median)))


def _logistic_start(z: np.ndarray) -> tuple[float, ...]:
    return float(np.median(z)), np.sqrt(3.0) / np.pi


def _cauchy_start(z: np.ndarray) -> tuple[float, ...]:
    q1, median, q3 = np.percentile(z, [25.0, 50.0, 75.0])
    return float(median), float(max(q3 - q1, 1e-3) / 2.0)


def _gumbel_start(z: np.ndarray) -> tuple[float, ...]:
    scale = np.sqrt(6.0) / np.pi
    return -EULER_GAMMA * scale, scale


def _student_t_start(z: np.ndarray) -> tuple[float, ...]:
    return 5.0, float(np.median(z)), float(np.sqrt(3.0 / 5.0))


def _gamma_start(z: np.ndarray) -> tuple[float, ...]:
    skew = max(float(stats.skew(z)), 0.2)
    shape = 4.0 / skew**2
    scale = 1.0 / np.sqrt(shape)
    loc = min(-shape * scale, float(z.min()) - 0.1)
    return shape, loc, scale


def _skew_normal_start(z: np.ndarray) -> tuple[float, ...]:
    skew = float(np.clip(stats.skew(z), -0.99, 0.99))
    g = abs(skew) ** (2.0 / 3.0)
    delta = np.sign(skew) * np.sqrt(np.pi / 2.0 * g / (g + ((4.0 - np.pi) / 2.0) ** (2.0 / 3.0)))
    delta = float(np.clip(delta, -0.95, 0.95))
    scale = 1.0 / np.sqrt(1.0 - 2.0 * delta**2 / np.pi)
    return delta / np.sqrt(1.0 - delta**2), -scale * delta * np.sqrt(2.0 / np.pi), scale


def _johnson_sb_start(z: np.ndarray) -> tuple[float, ...]:
    spread = float(z.max() - z.min())
    loc = float(z.min()) - 0.1 * spread
    scale = 1.2 * spread
    y = (z - loc) / scale
    w = np.log(y / (1.0 - y))
    b = 1.0 / float(w.std())
    return -float(w.mean()) * b, b, loc, scale


def _johnson_su_start(z: np.ndarray) -> tuple[float, ...]:
    # a = 0, b = 2 gives unit variance at this scale
    return 0.0, 2.0, float(np.median(z)), 1.755


FAMILIES: dict[str, Family] = {
    family.name: family
    for family in (
        Family("normal", stats.norm, ("loc", "scale"), ("real", "positive"), closed_form=_normal),
        Family("laplace", stats.laplace, ("loc", "scale"), ("real", "positive"), closed_form=_laplace),
        Family("logistic", stats.logistic, ("loc", "scale"), ("real", "positive"), initial=_logistic_start),
        Family(
            "student_t",
            stats.t,
            ("df", "loc", "scale"),
            ("positive", "real", "positive"),
            initial=_student_t_start,
        ),
        Family("cauchy", stats.cauchy, ("loc", "scale"), ("real", "positive"), initial=_cauchy_start),
        Family("gumbel", stats.gumbel_r, ("loc", "scale"), ("real", "positive"), initial=_gumbel_start),
        Family("uniform", stats.uniform, ("loc", "scale"), ("real", "positive"), closed_form=_uniform),
        Family(
            "gamma_shifted",
            stats.gamma,
            ("a", "loc", "scale"),
            ("positive", "below_min", "positive"),
            initial=_gamma_start,
        ),
        Family(
            "skew_normal",
            stats.skewnorm,
            ("a", "loc", "scale"),
            ("real", "real", "positive"),
            initial=_skew_normal_start,
        ),
        Family(
            "johnson_sb",
            stats.johnsonsb,
            ("a", "b", "loc", "scale"),
            ("real", "positive", "below_min", "covers_max"),
            initial=_johnson_sb_start,
        ),
        Family(
            "johnson_su",
            stats.johnsonsu,
            ("a", "b", "loc", "scale"),
            ("real", "positive", "real", "positive"),
            initial=_johnson_su_start,
        ),
    )
}

FAMILY_NAMES: tuple[str, ...] = tuple(FAMILIES)


@export
def get_family(name: str) -> Family:
    """Look up a family by name."""
    try:
        return FAMILIES[name]
    except KeyError:
        msg = f"unsupported family {name!r}; expected one of: {', '.join(FAMILY_NAMES)}"
        raise UnsupportedFamilyError(msg) from None
