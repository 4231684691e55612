"""Pydantic schemas for farm states and next-PM decisions."""

from typing import Self

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, Field, model_validator

from pmkit.costs.schemas import CostSetting
from pmkit.survival.schemas import AgeMonths, WeibullParams


class ComponentState(BaseModel):
    """Age and current scale parameter of one gearbox."""

    id: str
    age: AgeMonths
    theta: float = Field(gt=0, allow_inf_nan=False)

    def params(self, kappa: float) -> WeibullParams:
        """Return the component's Weibull law for the shared shape ``kappa``."""
        return WeibullParams(theta=self.theta, kappa=kappa)


class FarmState(BaseModel):
    """Farm at review time ``s`` planned over ``[s, T]``."""

    components: list[ComponentState] = Field(min_length=1)
    s: int = Field(ge=0, description="Current review month.")
    T: int = Field(description="Planning horizon month.")
    kappa: float = Field(gt=0, allow_inf_nan=False, description="Shared Weibull shape.")

    @model_validator(mode="after")
    def _check_state(self) -> Self:
        if self.s >= self.T:
            raise ValueError(f"s must precede T (s={self.s}, T={self.T})")
        ids = [component.id for component in self.components]
        if len(set(ids)) != len(ids):
            raise ValueError("component ids must be unique")
        return self

    @property
    def horizon(self) -> int:
        """Number of months in ``[s + 1, T]``."""
        return self.T - self.s

    @property
    def ids(self) -> list[str]:
        """Component ids in farm order."""
        return [component.id for component in self.components]


class NextPMDecision(BaseModel):
    """Decoded optimum: next PM month with its replacement set, or no PM before ``T``."""

    t_star: int | None = None
    replace_set: list[str] = Field(default_factory=list)
    expected_cost: float
    no_pm: bool

    @model_validator(mode="after")
    def _check_encoding(self) -> Self:
        if self.no_pm != (self.t_star is None) or self.no_pm != (not self.replace_set):
            raise ValueError("no_pm must hold exactly when t_star is None and the replacement set is empty")
        return self


class FirstFailureLaw(BaseModel):
    """Law of the first failure month ``s + L_a`` with per-component attribution.

    ``total[u - 1]`` is the probability that the first failure happens ``u`` months after
    ``s``; ``attribution[u - 1, j]`` is the part of it charged to component ``j``.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    total: NDArray[np.float64]
    attribution: NDArray[np.float64]
    terminal_survival: float

    @property
    def closure_error(self) -> float:
        """Absolute deviation of attributed mass plus terminal survival from one."""
        return abs(float(self.attribution.sum()) + self.terminal_survival - 1.0)


class PlanArray(BaseModel):
    """Binary decision variables ``w``, ``y`` and ``z`` for months ``s + 1..T``."""

    months: list[int]
    w: dict[str, list[int]]
    y: list[int]
    z: int


class PlanUnit(BaseModel):
    """Component of a plan request; ``theta`` defaults to the baseline scale."""

    id: str = Field(description="Stable identifier of the turbine position.")
    age: AgeMonths = Field(description="Age of the installed gearbox in months.")
    theta: float | None = Field(default=None, gt=0, description="Current scale parameter, e.g. after Cox updating.")


class PlanRequest(BaseModel):
    """Inputs of a next-PM plan."""

    baseline: WeibullParams = Field(description="Baseline Weibull law (theta0, kappa0).")
    costs: CostSetting = Field(default_factory=CostSetting, description="Cost parameters or seasonal model.")
    s: int = Field(ge=0, description="Current review month.")
    T: int = Field(description="Planning horizon month.")
    units: list[PlanUnit] = Field(min_length=1)
    tau_max: int | None = Field(default=None, ge=1, description="Grid length of the virtual cost minimisation.")
    t_max: int | None = Field(default=None, ge=2, description="Grid length of the farm cost rate minimisation.")


class PlanResponse(BaseModel):
    """Decoded next-PM decision with the farm cost rate it was computed at."""

    t_star: int | None = Field(description="Month of the next PM, or null when no PM is planned.")
    replace: list[str] = Field(description="Components replaced at the next PM.")
    expected_cost: float
    no_pm: bool
    c: float = Field(description="Farm monthly cost rate.")


class OpportunisticRequest(PlanRequest):
    """Plan inputs at a CM occasion together with the failed component."""

    failed_id: str


class OpportunisticResponse(BaseModel):
    """Components to replace at a CM occasion."""

    replace: list[str]
    c: float
