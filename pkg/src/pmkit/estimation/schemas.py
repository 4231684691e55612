"""Pydantic schemas for lifetime data, covariate series and fitted models."""

from enum import StrEnum

from pydantic import BaseModel, ConfigDict, Field, model_validator

from pmkit.shared.errors import InsufficientHistoryError
from pmkit.survival.schemas import WeibullParams


class CovariateSeries(BaseModel):
    """Gap-free monthly covariate history of one turbine."""

    model_config = ConfigDict(frozen=True)

    turbine_id: str = Field(description="Identifier of the monitored turbine.")
    start_month: int = Field(default=1, ge=1, description="Operation month of the first sample.")
    values: tuple[float, ...] = Field(min_length=1, description="One value per consecutive month.")

    @property
    def end_month(self) -> int:
        """Operation month of the last sample."""
        return self.start_month + len(self.values) - 1

    def window(self, first: int, last: int) -> tuple[float, ...]:
        """Return the values for months ``first..last`` inclusive."""
        if first < self.start_month or last > self.end_month or first > last:
            raise InsufficientHistoryError(
                f"Series '{self.turbine_id}' covers months {self.start_month}..{self.end_month}, "
                f"months {first}..{last} requested",
                turbine_id=self.turbine_id,
                first=first,
                last=last,
            )
        offset = first - self.start_month
        return self.values[offset : offset + last - first + 1]


class FailureRecord(BaseModel):
    """Observed failure age of a unit with its recorded covariate history."""

    unit_id: str
    failure_age: int = Field(ge=1, description="Failure age in months (v_k).")
    farm_id: str | None = None
    covariates: CovariateSeries | None = None


class LifetimeDataset(BaseModel):
    """Right-censored training data: failure records and ages of still-operating units."""

    failures: list[FailureRecord] = Field(default_factory=list)
    censored_ages: list[int] = Field(default_factory=list)

    @model_validator(mode="after")
    def _check_ages(self) -> "LifetimeDataset":
        if any(age < 1 for age in self.censored_ages):
            raise ValueError("censored ages must be at least 1 month")
        return self

    @property
    def failure_ages(self) -> list[int]:
        """Failure ages in record order."""
        return [record.failure_age for record in self.failures]


class CoxModel(BaseModel):
    """Baseline Weibull law together with the Cox regression coefficient."""

    model_config = ConfigDict(frozen=True)

    beta: float = Field(allow_inf_nan=False, description="Cox regression coefficient beta0.")
    baseline: WeibullParams


class WeibullFit(BaseModel):
    """Maximum likelihood estimate of the baseline Weibull law."""

    params: WeibullParams
    loglik: float
    converged: bool
    at_boundary: bool = False


class CoxFit(BaseModel):
    """Maximum partial-likelihood estimate of beta."""

    beta: float
    loglik: float
    flat_likelihood: bool = False
    converged: bool = True


class ThetaSource(StrEnum):
    """Where an updated scale parameter came from."""

    BASELINE = "baseline"
    COX = "cox"
    FALLBACK = "fallback"


class ThetaUpdate(BaseModel):
    """Scale parameter used for a component at a review time."""

    theta: float = Field(gt=0)
    source: ThetaSource
    reason: str | None = None


class FailureCoxFactor(BaseModel):
    """Cox factor of a failed unit evaluated at its failure age."""

    unit_id: str
    failure_age: int
    cox_factor: float | None = None
    skipped_reason: str | None = None
