"""Run configuration loaded from JSON with environment and flag overrides."""

import json
import logging
import os
from pathlib import Path
from typing import Any

from pydantic import Field, ValidationError

from pmkit.costs.services import FIXED_POINT_MAX_ITERATIONS, FIXED_POINT_TOLERANCE
from pmkit.engine.schemas import FarmScenario, PolicyName
from pmkit.shared.errors import ParseError, ValidationFailure

logger = logging.getLogger(__name__)

SEED_ENV = "PMKIT_SEED"


class RunConfig(FarmScenario):
    """Scenario plus the numerical and Monte Carlo settings of a command."""

    seed: int = Field(default=0, ge=0, description="Root seed of the Monte Carlo replications.")
    fixed_point_tolerance: float = Field(default=FIXED_POINT_TOLERANCE, gt=0)
    fixed_point_max_iterations: int = Field(default=FIXED_POINT_MAX_ITERATIONS, ge=1)
    policy: PolicyName = PolicyName.ALGORITHM1
    fixed_period: int | None = Field(default=None, ge=1, description="Period in months of the fixed_period policy.")
    replications: int = Field(default=100, ge=1)
    workers: int | None = Field(default=None, ge=1)


def json_pointer(loc: tuple[int | str, ...]) -> str:
    """Return the JSON pointer of a pydantic error location."""
    return "/" + "/".join(str(part).replace("~", "~0").replace("/", "~1") for part in loc)


def validation_failure(exc: ValidationError) -> ValidationFailure:
    """Convert the first pydantic error into a failure naming the offending key."""
    first = exc.errors()[0]
    pointer = json_pointer(tuple(first["loc"]))
    return ValidationFailure(f"{pointer}: {first['msg']}", pointer=pointer, errors=exc.error_count())


def parse_run_config(payload: dict[str, Any]) -> RunConfig:
    """Validate a decoded configuration document."""
    try:
        return RunConfig.model_validate(payload)
    except ValidationError as exc:
        raise validation_failure(exc) from exc


def load_run_config(path: Path | str) -> RunConfig:
    """Read and validate a JSON configuration file.

    Raises:
        ValidationFailure: The file is missing or a value is out of its domain.
        ParseError: The file is not valid JSON.
    """
    path = Path(path)
    if not path.is_file():
        raise ValidationFailure(f"Configuration file not found: {path}", path=str(path))
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"Invalid JSON in {path}: {exc.msg}", line=exc.lineno, column=exc.colno) from exc
    if not isinstance(payload, dict):
        raise ValidationFailure("Configuration must be a JSON object", pointer="")
    logger.debug("Loaded configuration from %s", path)
    return parse_run_config(payload)


def resolve_seed(flag: int | None, config: RunConfig) -> int:
    """Return the seed: command-line flag, then ``PMKIT_SEED``, then the configuration."""
    if flag is not None:
        return flag
    env_value = os.getenv(SEED_ENV)
    if env_value:
        try:
            seed = int(env_value)
        except ValueError as exc:
            raise ValidationFailure(f"{SEED_ENV} must be an integer, got '{env_value}'") from exc
        if seed < 0:
            raise ValidationFailure(f"{SEED_ENV} must be non-negative, got {seed}")
        return seed
    return config.seed
