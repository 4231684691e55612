"""Root, health and info endpoints."""

import logging
import sys
from importlib.metadata import version

import yaml
from fastapi import APIRouter, Request

from pmkit import __version__
from pmkit.costs.services import (
    DEFAULT_GRID_MONTHS,
    FIXED_POINT_TOLERANCE,
    SEASONAL_COSTS_PATH,
    load_seasonal_model,
)

from .schemas import AppInfo, HealthStatus, Link, RootResponse, Status

logger = logging.getLogger(__name__)

router = APIRouter()


@router.get("/")
def read_index(request: Request) -> RootResponse:
    """Return a welcome message with navigation links."""
    base = str(request.base_url).rstrip("/")
    return RootResponse(
        message="Welcome to pmkit",
        version=__version__,
        links=[
            Link(href=f"{base}/plans", rel="plans", title="Next PM plans"),
            Link(href=f"{base}/plans/opportunistic", rel="opportunistic", title="Replacements at a CM"),
            Link(href=f"{base}/docs", rel="docs", title="API Docs"),
        ],
    )


@router.get("/health")
def health() -> HealthStatus:
    """Report whether the bundled seasonal cost table loads."""
    try:
        load_seasonal_model()
    except (OSError, ValueError, yaml.YAMLError) as exc:
        logger.warning("Seasonal cost table at %s is unusable: %s", SEASONAL_COSTS_PATH, exc)
        return HealthStatus(status=Status.DEGRADED, seasonal_costs=str(SEASONAL_COSTS_PATH), detail=str(exc))
    return HealthStatus(status=Status.HEALTHY, seasonal_costs=str(SEASONAL_COSTS_PATH))


@router.get("/info")
def info() -> AppInfo:
    """Return versions and planning defaults."""
    return AppInfo(
        app_version=version("pmkit"),
        python_version=sys.version,
        numpy_version=version("numpy"),
        scipy_version=version("scipy"),
        pandas_version=version("pandas"),
        log_level=logging.getLevelName(logging.getLogger("pmkit").level),
        default_grid_months=DEFAULT_GRID_MONTHS,
        fixed_point_tolerance=FIXED_POINT_TOLERANCE,
    )
