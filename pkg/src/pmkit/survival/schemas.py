"""Pydantic schemas for the Weibull life-length law."""

from typing import Annotated

from pydantic import BaseModel, ConfigDict, Field

AgeMonths = Annotated[int, Field(ge=0, description="Component age in whole months.")]


class WeibullParams(BaseModel):
    """Scale/shape pair of a Weibull life length, ``P(L > t) = exp(-theta * t**kappa)``."""

    model_config = ConfigDict(frozen=True)

    theta: float = Field(gt=0, allow_inf_nan=False, description="Scale parameter in month^(-kappa).")
    kappa: float = Field(gt=0, allow_inf_nan=False, description="Dimensionless shape parameter.")

    def with_theta(self, theta: float) -> "WeibullParams":
        """Return a copy with a new scale parameter and the same shape."""
        return WeibullParams(theta=theta, kappa=self.kappa)


class AgedComponent(BaseModel):
    """A component law together with its current age."""

    model_config = ConfigDict(frozen=True)

    params: WeibullParams
    age: AgeMonths = 0
