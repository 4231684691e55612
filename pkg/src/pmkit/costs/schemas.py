"""Pydantic schemas for maintenance costs."""

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from pmkit.shared.time import MONTHS_PER_YEAR


class CostParams(BaseModel):
    """Constant maintenance cost parameters in virtual monetary units (v.u.)."""

    model_config = ConfigDict(frozen=True)

    g: float = Field(ge=0, allow_inf_nan=False, description="Total corrective maintenance cost.")
    h0: float = Field(ge=0, allow_inf_nan=False, description="Fixed cost of a PM occasion.")
    h: float = Field(ge=0, allow_inf_nan=False, description="Variable PM cost per replaced component.")
    m: float = Field(ge=0, allow_inf_nan=False, description="Monthly value loss of a component.")

    @model_validator(mode="after")
    def _check_cm_costlier(self) -> "CostParams":
        if self.g <= self.h:
            raise ValueError(f"g must exceed h (g={self.g}, h={self.h})")
        return self


class CostBreakdown(BaseModel):
    """Itemised costs from which the seasonal cost model is derived."""

    model_config = ConfigDict(frozen=True)

    gearbox: float = Field(default=0.64, gt=0)
    crane_transport: float = Field(default=0.04, ge=0)
    crane_setup: float = Field(default=0.09, ge=0)
    crane_working: float = Field(default=0.16, ge=0)
    manpower: float = Field(default=0.07, ge=0)
    initial_value_loss_fraction: float = Field(
        default=0.10, ge=0, lt=1, description="Share of the gearbox value lost on installation."
    )
    expected_life_months: float = Field(default=71.0, gt=0)
    pm_speedup: float = Field(default=6.0, gt=0, description="How many times faster a planned replacement is.")

    @property
    def maintenance(self) -> float:
        """Crane and labour cost of one replacement (c_m)."""
        return self.crane_transport + self.crane_setup + self.crane_working + self.manpower

    @property
    def initial_value_loss(self) -> float:
        """Value lost when a new gearbox is installed."""
        return self.gearbox * self.initial_value_loss_fraction


class SeasonalCostModel(BaseModel):
    """Cost model whose CM and PM costs depend on the calendar month of the replacement."""

    model_config = ConfigDict(frozen=True)

    c_g: float = Field(gt=0, description="Gearbox cost.")
    c_m: float = Field(ge=0, description="Crane and labour cost of one replacement.")
    h0: float = Field(ge=0, description="Fixed cost of a PM occasion.")
    h_base: float = Field(ge=0, description="Variable PM cost per component before downtime.")
    m: float = Field(ge=0, description="Monthly value loss of a component.")
    d: tuple[float, ...] = Field(description="Downtime cost for January..December.")
    pm_speedup: float = Field(default=6.0, gt=0)

    @field_validator("d")
    @classmethod
    def _check_downtime(cls, value: tuple[float, ...]) -> tuple[float, ...]:
        if len(value) != MONTHS_PER_YEAR:
            raise ValueError(f"d must hold {MONTHS_PER_YEAR} monthly values, got {len(value)}")
        if any(v <= 0 for v in value):
            raise ValueError("downtime costs must be positive")
        return value

    @classmethod
    def from_breakdown(cls, breakdown: CostBreakdown, d: tuple[float, ...]) -> "SeasonalCostModel":
        """Derive ``c_m``, ``h0``, ``h_base`` and ``m`` from itemised costs."""
        loss = breakdown.initial_value_loss
        return cls(
            c_g=breakdown.gearbox,
            c_m=breakdown.maintenance,
            h0=breakdown.crane_transport + breakdown.crane_setup,
            h_base=breakdown.crane_working + breakdown.manpower + loss,
            m=(breakdown.gearbox - loss) / breakdown.expected_life_months,
            d=d,
            pm_speedup=breakdown.pm_speedup,
        )


class MonthlyRate(BaseModel):
    """Steady-state maintenance cost rate of the farm."""

    c: float = Field(gt=0, description="Cost per month in v.u.")
    planning_interval: int = Field(ge=1, description="Grid month at which q_t is minimal.")
    iterations: int = Field(ge=0, description="Evaluations of the fixed-point map.")
    anchor: float = Field(description="Farm rate whose per-component share gave the effective costs behind ``c``.")
    components: int = Field(default=1, ge=1, description="Number of components n sharing the farm rate.")

    @property
    def share(self) -> float:
        """Return one component's share ``c / n``, the rate its virtual cost is measured against."""
        return self.c / self.components


class CostSetting(BaseModel):
    """Cost configuration of a run: constant parameters or the seasonal model."""

    mode: Literal["flat", "seasonal"] = "seasonal"
    flat: CostParams | None = None
    model: SeasonalCostModel | None = Field(
        default=None, description="Inline seasonal model; the bundled reference table when omitted."
    )
    start_calendar_month: int = Field(default=1, ge=1, le=12, description="Calendar month of farm month 1.")
    seasonal: bool = Field(
        default=False, description="Use month-dependent costs for planning snapshots and realised costs."
    )

    @model_validator(mode="after")
    def _check_mode(self) -> "CostSetting":
        if self.mode == "flat" and self.flat is None:
            raise ValueError("mode 'flat' requires a 'flat' block")
        return self
