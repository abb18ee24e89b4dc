"""Exception hierarchy for forecast-impact."""

from __future__ import annotations

from datetime import datetime
from typing import Any


class ForecastImpactError(Exception):
    """Base class for every error raised by forecast-impact."""


class ConfigError(ForecastImpactError, ValueError):
    """A run configuration or scenario file is invalid."""


class DimensionMismatchError(ForecastImpactError, ValueError):
    """A feature vector or matrix has a different width than expected."""

    def __init__(self, expected: int, actual: int) -> None:
        """Record the expected and actual widths."""
        self.expected = expected
        self.actual = actual
        super().__init__(f"expected {expected} features, got {actual}")

    def __reduce__(self) -> tuple[type, tuple[int, int]]:
        """Pickle with the constructor arguments."""
        return (self.__class__, (self.expected, self.actual))


################
# Data ingest #
################
class DataError(ForecastImpactError, ValueError):
    """Base class for demand data problems."""


class MissingColumnError(DataError):
    """A required column is absent from the input file."""


class UnparsableTimestampError(DataError):
    """A timestamp could not be parsed."""


class DuplicateTimestampError(DataError):
    """The same hour appears more than once."""


class GapInSeriesError(DataError):
    """The series does not advance in exact one-hour steps."""

    def __init__(self, missing: datetime) -> None:
        """Record the first hour that is missing from the series."""
        self.missing = missing
        super().__init__(f"series has a gap: no observation at {missing.isoformat()}")

    def __reduce__(self) -> tuple[type, tuple[datetime]]:
        """Pickle with the constructor arguments."""
        return (self.__class__, (self.missing,))


class NegativeDemandError(DataError):
    """A demand observation is negative."""


class NonFiniteDemandError(DataError):
    """A demand observation is NaN or infinite."""


class OverlappingSeasonsError(DataError):
    """Two seasons in a season table claim the same calendar day."""


class UncoveredDateError(DataError):
    """A calendar day is not covered by any season."""


class SeriesTooShortError(DataError):
    """No row can be built because every candidate date is missing a lag."""


class EmptySplitError(DataError):
    """A train/test split left one side empty."""


###########
# Fitting #
###########
class FitError(ForecastImpactError):
    """Base class for learner fitting problems."""


class SingularDesignError(FitError, ArithmeticError):
    """The design matrix is rank deficient and unregularised."""


class KTooLargeError(FitError, ValueError):
    """More neighbours were requested than there are training rows."""


class NoConvergenceError(FitError, ArithmeticError):
    """An iterative solver stopped before meeting its tolerance."""

    def __init__(self, msg: str, diagnostics: dict[str, Any] | None = None) -> None:
        """Attach solver diagnostics."""
        self.diagnostics = diagnostics or {}
        super().__init__(msg)


class DivergedLossError(FitError, ArithmeticError):
    """A training loss became non-finite."""

    def __init__(self, msg: str, diagnostics: dict[str, Any] | None = None) -> None:
        """Attach training diagnostics."""
        self.diagnostics = diagnostics or {}
        super().__init__(msg)


class NonFiniteUpdateError(FitError, ArithmeticError):
    """An online update produced non-finite weights."""

    def __init__(self, msg: str, diagnostics: dict[str, Any] | None = None) -> None:
        """Attach update diagnostics."""
        self.diagnostics = diagnostics or {}
        super().__init__(msg)


class NonPositiveTargetError(FitError, ValueError):
    """A Box-Cox target is zero or negative."""


class UnsupportedHyperparameterError(FitError, ValueError):
    """A hyperparameter value is recognised but not implemented."""


class NotFittedError(FitError, RuntimeError):
    """A model was used before it was fitted."""


###################
# Metrics/search #
###################
class LengthMismatchError(ForecastImpactError, ValueError):
    """Actual and predicted sequences differ in length."""


#############
# Residuals #
#############
class DistributionError(ForecastImpactError):
    """Base class for residual distribution problems."""


class DegenerateSampleError(DistributionError, ValueError):
    """The residual sample has zero variance."""


class UnsupportedFamilyError(DistributionError, ValueError):
    """The distribution family is not in the supported set."""


class AllFitsFailedError(DistributionError, RuntimeError):
    """No candidate family could be fitted."""


##########
# Market #
##########
class MarketError(ForecastImpactError):
    """Base class for market simulation problems."""


class MissingFuelPriceError(MarketError, LookupError):
    """A thermal plant has no fuel price for the requested year."""


class DegenerateHistoryError(MarketError, ValueError):
    """A carbon price history cannot support a linear fit."""
