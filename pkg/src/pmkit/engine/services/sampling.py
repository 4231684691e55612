"""Lifetime sampling, synthetic covariates and the failure sources driving the scheduler."""

import logging
import math
from collections.abc import Iterable, Sequence
from typing import Protocol

import numpy as np
from numpy.typing import NDArray

from pmkit.estimation.schemas import CovariateSeries
from pmkit.estimation.services import FIRST_YEAR_MONTHS, MIN_MONITORING_MONTHS, MOVING_AVERAGE_MONTHS
from pmkit.shared.errors import UnknownUnitError, ValidationFailure
from pmkit.shared.time import MONTHS_PER_YEAR
from pmkit.survival.schemas import WeibullParams

from ..schemas import CovariateProfile, EventScript, FarmScenario

logger = logging.getLogger(__name__)


def sample_lifetime(
    theta_by_month: Sequence[float] | NDArray[np.float64],
    kappa: float,
    rng: np.random.Generator,
    start_age: int = 0,
) -> int | None:
    """Sample a failure age month by month under a time-varying scale parameter.

    ``theta_by_month[i]`` is in force during age month ``start_age + i + 1``; a component
    alive at the start of age month ``t`` survives it with probability
    ``exp(theta * ((t - 1)**kappa - t**kappa))``. Returns ``None`` when the component
    outlives the supplied months.
    """
    thetas = np.asarray(theta_by_month, dtype=np.float64)
    if thetas.size == 0:
        return None
    if np.any(thetas <= 0):
        raise ValueError("theta must be positive in every month")
    ages = start_age + np.arange(1, thetas.size + 1, dtype=np.float64)
    fail_probability = -np.expm1(thetas * ((ages - 1.0) ** kappa - ages**kappa))
    failed = np.flatnonzero(rng.random(thetas.size) < fail_probability)
    return int(ages[failed[0]]) if failed.size else None


def sample_weibull_months(p: WeibullParams, size: int, rng: np.random.Generator) -> NDArray[np.int64]:
    """Draw ``size`` month-rounded lifetimes with constant scale, ``P(L > t) = exp(-theta t**kappa)``."""
    exposure = -np.log1p(-rng.random(size))
    return np.maximum(1, np.ceil((exposure / p.theta) ** (1.0 / p.kappa))).astype(np.int64)


def covariate_values(
    profile: CovariateProfile, months: NDArray[np.float64], ages: NDArray[np.float64], rng: np.random.Generator
) -> NDArray[np.float64]:
    """Return the synthetic covariate at the given farm months for gearboxes of the given ages."""
    seasonal = profile.amplitude * np.sin(2.0 * math.pi * (months - 1.0) / MONTHS_PER_YEAR)
    drift = profile.drift * np.maximum(0.0, ages - profile.onset)
    noise = rng.normal(0.0, profile.noise_sd, size=months.shape)
    return profile.mean + seasonal + drift + noise


def synth_covariates(profile: CovariateProfile, months: int, turbine_id: str = "synthetic") -> CovariateSeries:
    """Return ``months`` synthetic monthly values starting at operation month 1."""
    if months < MIN_MONITORING_MONTHS:
        raise ValidationFailure(f"At least {MIN_MONITORING_MONTHS} months are required, got {months}")
    grid = np.arange(1, months + 1, dtype=np.float64)
    values = covariate_values(profile, grid, grid, np.random.default_rng(profile.seed))
    return CovariateSeries(turbine_id=turbine_id, start_month=1, values=tuple(values.tolist()))


def cox_theta_path(
    theta0: float, beta: float, values: NDArray[np.float64], months: NDArray[np.int64]
) -> NDArray[np.float64]:
    """Return ``theta0 * exp(beta * (x3(t) - x_first_year))`` for each farm month ``t``.

    ``values[t - 1]`` is the covariate of month ``t``. Months before the Cox factor is
    available keep ``theta0``.
    """
    first_year = float(np.mean(values[:FIRST_YEAR_MONTHS]))
    window = np.ones(MOVING_AVERAGE_MONTHS) / MOVING_AVERAGE_MONTHS
    moving = np.convolve(values, window, mode="valid")
    thetas = np.full(months.shape, theta0, dtype=np.float64)
    usable = months >= MIN_MONITORING_MONTHS
    thetas[usable] = theta0 * np.exp(beta * (moving[months[usable] - MOVING_AVERAGE_MONTHS] - first_year))
    return thetas


class FailureSource(Protocol):
    """Supplies failure months of installed gearboxes and the covariates seen by the scheduler."""

    def install(self, unit_id: str, month: int, age: int) -> int | None:
        """Register a gearbox of ``age`` months at farm month ``month``; return its failure month."""
        ...

    def covariates(self, unit_id: str) -> CovariateSeries | None:
        """Return the covariate history of a turbine position."""
        ...


class ScriptedFailures:
    """Replays recorded failure ages: the k-th age belongs to the k-th gearbox installed in a position."""

    def __init__(self, script: EventScript, unit_ids: Iterable[str] | None = None) -> None:
        if unit_ids is not None:
            known = set(unit_ids)
            unknown = sorted((set(script.failure_ages) | set(script.covariates)) - known)
            if unknown:
                raise UnknownUnitError(
                    f"Event script references unknown units: {', '.join(unknown)}", unit_ids=unknown
                )
        self._script = script
        self._installed: dict[str, int] = {}

    def install(self, unit_id: str, month: int, age: int) -> int | None:
        index = self._installed.get(unit_id, 0)
        self._installed[unit_id] = index + 1
        ages = self._script.failure_ages.get(unit_id, [])
        if index >= len(ages):
            return None
        failure_age = ages[index]
        if failure_age <= age:
            raise ValidationFailure(
                f"Scripted failure age {failure_age} of '{unit_id}' is not beyond its age {age} at month {month}",
                unit_id=unit_id,
                failure_age=failure_age,
            )
        return month + failure_age - age

    def covariates(self, unit_id: str) -> CovariateSeries | None:
        return self._script.covariates.get(unit_id)


class SampledFailures:
    """Draws Cox-modulated Weibull lifetimes from synthetic covariate paths.

    A position's covariate drifts with the age of its current gearbox and restarts on
    replacement; the first-year average stays that of the turbine's first year.
    """

    def __init__(self, scenario: FarmScenario, rng: np.random.Generator) -> None:
        self._baseline = scenario.baseline
        self._beta = scenario.beta
        self._profile = scenario.covariate_profile
        self._horizon = scenario.farm.horizon_month
        self._rng = rng
        self._values: dict[str, NDArray[np.float64]] = {}
        self._series: dict[str, CovariateSeries] = {}

    def install(self, unit_id: str, month: int, age: int) -> int | None:
        history = self._values.get(unit_id)
        first = 1 if history is None else month + 1
        months = np.arange(first, self._horizon + 1, dtype=np.float64)
        path = covariate_values(self._profile, months, months - (month - age), self._rng)
        values = path if history is None else np.concatenate([history[:month], path])
        self._values[unit_id] = values
        self._series[unit_id] = CovariateSeries(turbine_id=unit_id, start_month=1, values=tuple(values.tolist()))

        future = np.arange(month + 1, self._horizon + 1, dtype=np.int64)
        thetas = cox_theta_path(self._baseline.theta, self._beta, values, future)
        failure_age = sample_lifetime(thetas, self._baseline.kappa, self._rng, start_age=age)
        return None if failure_age is None else month + failure_age - age

    def covariates(self, unit_id: str) -> CovariateSeries | None:
        return self._series.get(unit_id)
