"""Distribution fits to pooled forecast residuals and the seeded residual sampler."""

from typing import Any

__all__ = []


def export(defn: Any) -> Any:  # noqa: ANN401
    """Module-level export decorator."""
    globals()[defn.__name__] = defn
    __all__.append(defn.__name__)  # noqa: PYI056
    return defn


from forecast_impact.residuals.families import FAMILIES, FAMILY_NAMES, Family, get_family
from forecast_impact.residuals.models import (
    ResidualDistribution,
    dump_distribution,
    load_distribution,
    sample,
)
from forecast_impact.residuals.fit import (
    empirical_density,
    fit_distribution,
    freedman_diaconis_bins,
    rank_families,
    score_sse,
    select_best,
)
