"""Fitted residual distributions, their sampler and their JSON documents."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from forecast_impact.errors import ConfigError
from forecast_impact.residuals import export
from forecast_impact.residuals.families import FAMILIES, get_family


log = logging.getLogger(__name__)

POINT_MASS = "point_mass"


@export
class ResidualDistribution(BaseModel):
    """
    A residual distribution in MWh.

    ``params`` are in scipy order (shapes, loc, scale). ``sse`` and ``n`` describe the sample a
    fitted distribution came from and are None for the constructed controls.
    """

    model_config = ConfigDict(frozen=True)

    family: str
    params: tuple[float, ...]
    sse: float | None = None
    n: int | None = None
    n_bins: int | None = None
    bin_rule: str | None = None
    mae: float | None = None
    converged: bool = True

    @field_validator("family")
    @classmethod
    def known_family(cls, v: str) -> str:
        if v != POINT_MASS:
            get_family(v)
        return v

    @classmethod
    def point_mass(cls, value: float = 0.0) -> ResidualDistribution:
        """Every draw equals ``value``; a zero point mass leaves demand unperturbed."""
        return cls(family=POINT_MASS, params=(float(value),))

    @classmethod
    def normal(cls, mu: float, sd: float) -> ResidualDistribution:
        """Unfitted normal distribution, as used by the error sweeps."""
        if sd < 0:
            msg = f"sd must be non-negative, got {sd}"
            raise ConfigError(msg)
        if sd == 0:
            return cls.point_mass(mu)
        return cls(family="normal", params=(float(mu), float(sd)))

    @property
    def param_names(self) -> tuple[str, ...]:
        """Parameter labels matching ``params``."""
        return ("value",) if self.family == POINT_MASS else FAMILIES[self.family].param_names

    @property
    def scipy_dist(self) -> Any:  # noqa: ANN401
        """The scipy frozen distribution (not available for a point mass)."""
        if self.family == POINT_MASS:
            msg = "a point mass has no density"
            raise ValueError(msg)
        return FAMILIES[self.family].freeze(self.params)

    @property
    def support(self) -> tuple[float, float]:
        """(lower, upper), possibly infinite."""
        if self.family == POINT_MASS:
            return self.params[0], self.params[0]
        lower, upper = self.scipy_dist.support()
        return float(lower), float(upper)

    def pdf(self, x: np.ndarray) -> np.ndarray:
        """Density at x."""
        return self.scipy_dist.pdf(x)

    def cdf(self, x: np.ndarray) -> np.ndarray:
        """Cumulative probability at x."""
        if self.family == POINT_MASS:
            return (np.asarray(x, dtype=float) >= self.params[0]).astype(float)
        return self.scipy_dist.cdf(x)

    def sample(self, n: int, seed: int | np.random.Generator = 0) -> np.ndarray:
        """
        ``n`` seeded draws by inverse-CDF sampling.

        Uniforms are kept strictly inside (0, 1) so every draw lies within the support.
        """
        if n < 0:
            msg = f"cannot draw {n} samples"
            raise ConfigError(msg)
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        if self.family == POINT_MASS:
            return np.full(n, self.params[0])
        tiny = np.finfo(float).tiny
        u = np.clip(rng.random(n), tiny, 1.0 - np.finfo(float).eps)
        return np.asarray(self.scipy_dist.ppf(u), dtype=float)


@export
def sample(dist: ResidualDistribution, seed: int | np.random.Generator, n: int) -> np.ndarray:
    """Seeded residual draws in MWh."""
    return dist.sample(n, seed)


class DistributionDocument(BaseModel):
    """On-disk form of a fitted distribution, with its parameter labels."""

    format_version: int = Field(default=1, ge=1, le=1)
    distribution: ResidualDistribution
    param_names: tuple[str, ...]


@export
def dump_distribution(dist: ResidualDistribution, path: Path) -> None:
    """Write a distribution document as indented JSON."""
    document = DistributionDocument(distribution=dist, param_names=dist.param_names)
    Path(path).write_text(document.model_dump_json(indent=2) + "\n")
    log.debug("Wrote %s distribution to %s", dist.family, path)


@export
def load_distribution(path: Path) -> ResidualDistribution:
    """Read a distribution document back; the sampler is reconstructed exactly."""
    return DistributionDocument.model_validate_json(Path(path).read_text()).distribution
