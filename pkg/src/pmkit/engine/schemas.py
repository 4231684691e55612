"""Pydantic schemas for farm scenarios, event scripts, trajectories and simulation reports."""

from enum import StrEnum
from typing import Annotated, Self

from pydantic import BaseModel, Field, model_validator

from pmkit.costs.schemas import CostSetting
from pmkit.estimation.schemas import CovariateSeries
from pmkit.survival.schemas import AgeMonths, WeibullParams

FailureAge = Annotated[int, Field(gt=0)]


class UnitSpec(BaseModel):
    """A turbine position and the age of its installed gearbox at the first review."""

    id: str
    age: AgeMonths = 0


class FarmSpec(BaseModel):
    """Units and planning window of a farm."""

    start_month: int = Field(default=15, ge=1, description="First review month s.")
    horizon_month: int = Field(description="Planning horizon T.")
    units: list[UnitSpec] = Field(min_length=1)

    @model_validator(mode="after")
    def _check_farm(self) -> Self:
        if self.start_month >= self.horizon_month:
            raise ValueError(f"start_month must precede horizon_month ({self.start_month} >= {self.horizon_month})")
        ids = [unit.id for unit in self.units]
        if len(set(ids)) != len(ids):
            raise ValueError("unit ids must be unique")
        return self


class CovariateProfile(BaseModel):
    """Generator of synthetic monthly covariates (e.g. gearbox temperatures)."""

    mean: float = 60.0
    amplitude: float = Field(default=0.0, description="Amplitude of the 12-month sinusoid.")
    drift: float = Field(default=0.0, description="Increase per month of gearbox age after the onset.")
    onset: int = Field(default=0, ge=0, description="Gearbox age at which the drift starts.")
    noise_sd: float = Field(default=0.0, ge=0)
    seed: int = 0


class FarmScenario(BaseModel):
    """Everything a scheduler run needs besides the failure source."""

    baseline: WeibullParams
    beta: float = Field(default=0.0, allow_inf_nan=False)
    costs: CostSetting = Field(default_factory=CostSetting)
    farm: FarmSpec
    review_period: int = Field(default=3, ge=1)
    tau_max: int | None = Field(default=None, ge=1)
    t_max: int | None = Field(default=None, ge=2)
    allow_covariate_fallback: bool = True
    covariate_profile: CovariateProfile = Field(default_factory=CovariateProfile)


class EventScript(BaseModel):
    """Recorded failure ages and covariate series used to replay a farm's history.

    ``failure_ages[unit]`` lists the failure age of each successive gearbox installed in
    that position, starting with the one present at the first review.
    """

    failure_ages: dict[str, list[FailureAge]] = Field(default_factory=dict)
    covariates: dict[str, CovariateSeries] = Field(default_factory=dict)


class Action(StrEnum):
    """What happened after a review."""

    ADVANCE = "advance"
    PM_EXECUTED = "pm_executed"
    CM_EXECUTED = "cm_executed"


class TrajectoryPoint(BaseModel):
    """One review of the rolling scheduler and the action that followed it."""

    s: int = Field(description="Review month at which the plan was made.")
    t_star: int | None = None
    planned_count: int = 0
    action: Action
    executed_at: int = Field(description="Month at which the action took effect (the next review month).")
    replaced_ids: list[str] = Field(default_factory=list)
    cost: float = 0.0
    ages: dict[str, int] = Field(default_factory=dict, description="Component ages at the review.")


class PolicyName(StrEnum):
    """Maintenance policies compared by Monte Carlo simulation."""

    ALGORITHM1 = "algorithm1"
    CM_ONLY = "cm_only"
    FIXED_PERIOD = "fixed_period"


class ReplicationResult(BaseModel):
    """Realised totals of one simulated farm history."""

    total_cost: float
    cm_count: int
    pm_count: int
    replacements: int


class SimulationReport(BaseModel):
    """Aggregated Monte Carlo results of one policy."""

    policy: str
    replications: int
    horizon_months: int
    mean_total_cost: float
    ci_low: float | None = None
    ci_high: float | None = None
    mean_cm_count: float
    mean_pm_count: float
    mean_replacements_per_occasion: float
    zero_pm_fraction: float
