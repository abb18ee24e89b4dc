"""Maximum likelihood fits, histogram SSE scoring and family selection."""

from __future__ import annotations

import logging
from typing import TYPE_CHECKING, Any, Protocol

import numpy as np
from joblib import Parallel, delayed
from scipy import optimize

from forecast_impact.errors import (
    AllFitsFailedError,
    DegenerateSampleError,
    ForecastImpactError,
    UnsupportedFamilyError,
)
from forecast_impact.residuals import export
from forecast_impact.residuals.families import FAMILY_NAMES, get_family
from forecast_impact.residuals.models import ResidualDistribution


if TYPE_CHECKING:
    from collections.abc import Iterable

    from forecast_impact.residuals.families import Family


log = logging.getLogger(__name__)

MIN_RESIDUALS = 50
MIN_BINS = 10
MAX_BINS = 200
BIN_RULE = "freedman-diaconis"
LOGLIK_TOLERANCE = 1e-8


class HasPdf(Protocol):
    """Anything with a density."""

    def pdf(self, x: np.ndarray) -> np.ndarray:
        """Density at x."""
        ...


def _check_sample(residuals: np.ndarray) -> np.ndarray:
    x = np.asarray(residuals, dtype=float).ravel()
    if len(x) < MIN_RESIDUALS:
        msg = f"need at least {MIN_RESIDUALS} residuals to fit, got {len(x)}"
        raise DegenerateSampleError(msg)
    if not np.all(np.isfinite(x)):
        msg = "residuals contain non-finite values"
        raise DegenerateSampleError(msg)
    if np.ptp(x) == 0:
        msg = f"all {len(x)} residuals equal {x[0]}; the sample has zero variance"
        raise DegenerateSampleError(msg)
    return x


@export
def freedman_diaconis_bins(residuals: np.ndarray) -> int:
    """Bin count from the Freedman-Diaconis width 2 * IQR / n**(1/3), kept within 10..200."""
    x = np.asarray(residuals, dtype=float).ravel()
    q1, q3 = np.percentile(x, [25.0, 75.0])
    width = 2.0 * (q3 - q1) / len(x) ** (1.0 / 3.0)
    if width <= 0 or np.ptp(x) == 0:
        return MIN_BINS
    return int(np.clip(np.ceil(np.ptp(x) / width), MIN_BINS, MAX_BINS))


@export
def empirical_density(residuals: np.ndarray, n_bins: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Bin centres and density-normalised counts over [min, max] of the residuals."""
    x = np.asarray(residuals, dtype=float).ravel()
    bins = freedman_diaconis_bins(x) if n_bins is None else n_bins
    if bins < MIN_BINS:
        msg = f"need at least {MIN_BINS} bins, got {bins}"
        raise DegenerateSampleError(msg)
    density, edges = np.histogram(x, bins=bins, range=(x.min(), x.max()), density=True)
    return (edges[:-1] + edges[1:]) / 2.0, density


@export
def score_sse(dist: HasPdf, residuals: np.ndarray, n_bins: int | None = None) -> float:
    """Sum over bins of (empirical density - density at the bin centre) squared."""
    centres, density = empirical_density(residuals, n_bins)
    return float(np.sum((density - dist.pdf(centres)) ** 2))


def _simplex_fit(family: Family, z: np.ndarray) -> tuple[tuple[float, ...], bool, dict[str, Any]]:
    """Minimise the mean negative log-likelihood on standardised data from the moment start."""
    if family.initial is None:
        msg = f"{family.name} has no starting point for a simplex search"
        raise UnsupportedFamilyError(msg)

    def objective(theta: np.ndarray) -> float:
        params = family.decode(theta, z)
        with np.errstate(all="ignore"):
            value = -float(np.mean(family.dist.logpdf(z, *params)))
        return value if np.isfinite(value) else 1e10

    start = family.encode(family.initial(z), z)
    result = optimize.minimize(
        objective,
        start,
        method="Nelder-Mead",
        options={
            "xatol": 1e-6,
            "fatol": LOGLIK_TOLERANCE,
            "maxiter": 4000 * len(start),
            "maxfev": 8000 * len(start),
        },
    )
    diagnostics = {"iterations": int(result.nit), "evaluations": int(result.nfev), "message": str(result.message)}
    return family.decode(result.x, z), bool(result.success), diagnostics


def _unstandardise(params: tuple[float, ...], mean: float, sd: float) -> tuple[float, ...]:
    *shapes, loc, scale = params
    return (*shapes, mean + sd * loc, sd * scale)


@export
def fit_distribution(residuals: np.ndarray, family: str) -> ResidualDistribution:
    """
    Maximum likelihood fit of one family.

    Normal, uniform and Laplace use their closed forms. The rest run a Nelder-Mead search on
    standardised residuals from a moment-based start; if it stops before the log-likelihood
    settles the best point found is returned with ``converged=False``.
    """
    spec = get_family(family)
    x = _check_sample(residuals)

    converged = True
    if spec.closed_form is not None:
        params = spec.closed_form(x)
    else:
        mean, sd = float(x.mean()), float(x.std())
        z = (x - mean) / sd
        standard, converged, diagnostics = _simplex_fit(spec, z)
        params = _unstandardise(standard, mean, sd)
        if not converged:
            log.warning("%s fit did not converge: %s", family, diagnostics)
        else:
            log.debug("%s fit converged: %s", family, diagnostics)

    params = tuple(float(p) for p in params)
    n_bins = freedman_diaconis_bins(x)
    sse = score_sse(spec.freeze(params), x, n_bins)
    return ResidualDistribution(
        family=family,
        params=params,
        sse=sse,
        n=len(x),
        n_bins=n_bins,
        bin_rule=BIN_RULE,
        mae=float(np.mean(np.abs(x))),
        converged=converged,
    )


def _try_fit(residuals: np.ndarray, family: str) -> ResidualDistribution | str:
    try:
        return fit_distribution(residuals, family)
    except (ForecastImpactError, FloatingPointError, ValueError) as exc:
        return f"{family}: {exc}"


@export
def rank_families(
    residuals: np.ndarray,
    families: Iterable[str] = FAMILY_NAMES,
    jobs: int = 1,
) -> list[ResidualDistribution]:
    """
    Fit every family and order the fits by SSE, then fewer parameters, then family name.

    Families whose fit fails are logged and left out. All fits are scored on the same bins.
    """
    names = list(dict.fromkeys(families))
    if not names:
        msg = "no families to fit"
        raise AllFitsFailedError(msg)
    for name in names:
        get_family(name)
    x = _check_sample(residuals)

    outcomes = Parallel(n_jobs=jobs)(delayed(_try_fit)(x, name) for name in names)
    fits = [outcome for outcome in outcomes if isinstance(outcome, ResidualDistribution)]
    for failure in (outcome for outcome in outcomes if isinstance(outcome, str)):
        log.warning("Fit failed: %s", failure)
    if not fits:
        msg = f"every family failed to fit: {', '.join(names)}"
        raise AllFitsFailedError(msg)
    return sorted(fits, key=lambda fit: (fit.sse, len(fit.params), fit.family))


@export
def select_best(residuals: np.ndarray, families: Iterable[str] = FAMILY_NAMES, jobs: int = 1) -> ResidualDistribution:
    """The lowest-SSE fit among ``families``."""
    best = rank_families(residuals, families, jobs)[0]
    log.info("Selected %s (SSE %.3g over %d bins)", best.family, best.sse, best.n_bins)
    return best
