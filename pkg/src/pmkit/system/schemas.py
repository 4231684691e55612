"""Pydantic models of the service endpoints."""

from enum import StrEnum

from pydantic import BaseModel, Field


class Status(StrEnum):
    """Health check status values."""

    HEALTHY = "healthy"
    DEGRADED = "degraded"


class HealthStatus(BaseModel):
    """Health check response; degraded when the bundled seasonal cost table cannot be read."""

    status: Status
    seasonal_costs: str = Field(description="Path of the bundled seasonal cost table.")
    detail: str | None = None


class Link(BaseModel):
    """Hypermedia link."""

    href: str
    rel: str
    title: str


class RootResponse(BaseModel):
    """Root endpoint response with navigation links."""

    message: str
    version: str
    links: list[Link]


class AppInfo(BaseModel):
    """Versions of pmkit and its numerical stack, with the planning grid defaults."""

    app_version: str
    python_version: str
    numpy_version: str
    scipy_version: str
    pandas_version: str
    log_level: str
    default_grid_months: int = Field(description="Minimum tau_max/t_max when none is configured.")
    fixed_point_tolerance: float
