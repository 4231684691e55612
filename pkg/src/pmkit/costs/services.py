"""Renewal-reward cost model: PM cost, virtual and effective replacement costs, farm rate c."""

import logging
import math
from collections.abc import Callable
from functools import lru_cache
from pathlib import Path

import numpy as np
import pandas as pd
import yaml
from numpy.typing import ArrayLike, NDArray
from scipy.optimize import brentq

from pmkit.shared.errors import GridTooShortError, NonConvergenceError
from pmkit.shared.time import MONTH_NAMES, MONTHS_PER_YEAR, calendar_month
from pmkit.survival.schemas import WeibullParams
from pmkit.survival.services import conditional_survival_curve, mean_life

from .schemas import CostBreakdown, CostParams, CostSetting, MonthlyRate, SeasonalCostModel

logger = logging.getLogger(__name__)

SCRIPT_DIR = Path(__file__).parent.resolve()
SEASONAL_COSTS_PATH = SCRIPT_DIR.parent.parent.parent / "data" / "costs" / "seasonal.yaml"

DEFAULT_GRID_MONTHS = 600
GRID_MEAN_LIFE_MULTIPLE = 8
FIXED_POINT_TOLERANCE = 1e-8
FIXED_POINT_MAX_ITERATIONS = 50
GRID_TAIL_TOLERANCE = 1e-4
_AGE_CHUNK = 256


# -- reference data --------------------------------------------------------------------


@lru_cache(maxsize=8)
def load_seasonal_model(path: Path | None = None) -> SeasonalCostModel:
    """Load the cost breakdown and monthly downtime table from YAML."""
    source = path or SEASONAL_COSTS_PATH
    payload = yaml.safe_load(source.read_text(encoding="utf-8")) or {}
    downtime = payload.get("downtime")
    if not isinstance(downtime, dict) or set(downtime) != set(MONTH_NAMES):
        raise ValueError(f"Expected a 'downtime' mapping for {', '.join(MONTH_NAMES)} in {source}")
    breakdown = CostBreakdown.model_validate(payload.get("breakdown") or {})
    d = tuple(float(downtime[name]) for name in MONTH_NAMES)
    return SeasonalCostModel.from_breakdown(breakdown, d)


# -- per-occasion costs ------------------------------------------------------------------


def pm_cost(cp: CostParams, age: int) -> float:
    """Return the PM share ``h + age * m`` of one component; ``h0`` is charged per occasion."""
    if age < 0:
        raise ValueError(f"age must be non-negative, got {age}")
    return cp.h + age * cp.m


def seasonal_params(sm: SeasonalCostModel, month_of_year: int) -> CostParams:
    """Return the cost parameters of a replacement in calendar month ``month_of_year``."""
    if not 1 <= month_of_year <= MONTHS_PER_YEAR:
        raise ValueError(f"month_of_year must be in 1..12, got {month_of_year}")
    d = sm.d[month_of_year - 1]
    return CostParams(g=sm.c_g + sm.c_m + d, h0=sm.h0, h=sm.h_base + d / sm.pm_speedup, m=sm.m)


def annual_average_params(sm: SeasonalCostModel) -> CostParams:
    """Return the cost parameters with the downtime cost averaged over the year."""
    d = float(np.mean(sm.d))
    return CostParams(g=sm.c_g + sm.c_m + d, h0=sm.h0, h=sm.h_base + d / sm.pm_speedup, m=sm.m)


def resolve_model(setting: CostSetting) -> SeasonalCostModel:
    """Return the seasonal model of a setting, loading the bundled table when none is inline."""
    return setting.model or load_seasonal_model()


def average_params(setting: CostSetting) -> CostParams:
    """Return the constant parameters used for the farm cost rate ``c``."""
    if setting.mode == "flat":
        assert setting.flat is not None
        return setting.flat
    return annual_average_params(resolve_model(setting))


def params_at(setting: CostSetting, farm_month: int) -> CostParams:
    """Return the parameters in force at a farm-operation month."""
    if setting.mode == "seasonal" and setting.seasonal:
        return seasonal_params(resolve_model(setting), calendar_month(farm_month, setting.start_calendar_month))
    return average_params(setting)


def default_grid_months(p: WeibullParams) -> int:
    """Return the default ``tau_max``/``t_max``: 600 months or eight mean lives if longer."""
    return max(DEFAULT_GRID_MONTHS, math.ceil(GRID_MEAN_LIFE_MULTIPLE * mean_life(p)))


# -- virtual and effective replacement costs ---------------------------------------------


def rate_value(c: MonthlyRate | float) -> float:
    """Return the monthly rate as a plain float."""
    return c.c if isinstance(c, MonthlyRate) else float(c)


def component_rate(c: MonthlyRate | float) -> float:
    """Return the rate one component is measured against.

    A :class:`MonthlyRate` contributes its per-component share ``c / n``; a plain float is
    taken to be that share already.
    """
    return c.share if isinstance(c, MonthlyRate) else float(c)


def virtual_cost_curve(
    p: WeibullParams, cp: CostParams, c: float, ages: ArrayLike, tau_max: int
) -> NDArray[np.float64]:
    """Return ``b(a)`` for every age in ``ages``.

    ``b(a)`` is the smallest, over planned replacement times ``tau = 1..tau_max``, expected
    residual-cycle cost of an age-``a`` component in excess of ``c`` per expected month,
    floored at zero. ``c`` is the rate of a single component, the farm rate divided by
    the number of components sharing it.
    """
    if tau_max < 1:
        raise ValueError(f"tau_max must be at least 1, got {tau_max}")
    grid = np.atleast_1d(np.asarray(ages, dtype=np.float64))
    tau = np.arange(1, tau_max + 1, dtype=np.float64)
    result = np.empty(grid.shape, dtype=np.float64)
    for start in range(0, grid.size, _AGE_CHUNK):
        chunk = grid[start : start + _AGE_CHUNK]
        surv = conditional_survival_curve(p, chunk, tau_max)
        duration = np.cumsum(surv[:, :-1], axis=1)
        s_tau = surv[:, 1:]
        planned = cp.h0 + cp.h + (chunk[:, None] + tau[None, :]) * cp.m
        excess = cp.g * (1.0 - s_tau) + planned * s_tau - c * duration
        result[start : start + _AGE_CHUNK] = np.maximum(0.0, excess.min(axis=1))
    return result


@lru_cache(maxsize=256)
def _virtual_cost_table(p: WeibullParams, cp: CostParams, c: float, tau_max: int, size: int) -> NDArray[np.float64]:
    table = virtual_cost_curve(p, cp, c, np.arange(size), tau_max)
    table.flags.writeable = False
    return table


def virtual_cost_lookup(
    p: WeibullParams, cp: CostParams, c: float, ages: ArrayLike, tau_max: int
) -> NDArray[np.float64]:
    """Return ``b(a)`` for integer ages from a memoised table over ``0..max(ages)``.

    The table grows in blocks of ``_AGE_CHUNK`` ages, so repeated reviews of the same
    component law and rate reuse one evaluation.
    """
    grid = np.atleast_1d(np.asarray(ages, dtype=np.int64))
    if grid.size and grid.min() < 0:
        raise ValueError(f"ages must be non-negative, got {int(grid.min())}")
    top = int(grid.max()) + 1 if grid.size else 1
    size = -(-top // _AGE_CHUNK) * _AGE_CHUNK
    return _virtual_cost_table(p, cp, float(c), tau_max, size)[grid]


def virtual_cost(
    p: WeibullParams, cp: CostParams, c: MonthlyRate | float, age: int, tau_max: int | None = None
) -> float:
    """Return the virtual replacement cost ``b(age)``; ``tau_max`` defaults to :func:`default_grid_months`."""
    if age < 0:
        raise ValueError(f"age must be non-negative, got {age}")
    if tau_max is None:
        tau_max = default_grid_months(p)
    return float(virtual_cost_curve(p, cp, component_rate(c), [age], tau_max)[0])


def effective_cost_curve(
    p: WeibullParams, cp: CostParams, c: float, ages: ArrayLike, tau_max: int
) -> NDArray[np.float64]:
    """Vectorised :func:`effective_cost_B`."""
    grid = np.atleast_1d(np.asarray(ages, dtype=np.float64))
    return np.minimum(cp.h + grid * cp.m, virtual_cost_curve(p, cp, c, grid, tau_max))


def effective_cost_B(
    p: WeibullParams, cp: CostParams, c: MonthlyRate | float, age: int, tau_max: int | None = None
) -> float:
    """Return ``B(age) = min(h + age * m, b(age))``."""
    return min(pm_cost(cp, age), virtual_cost(p, cp, c, age, tau_max))


# -- farm cost rate ----------------------------------------------------------------------


def farm_survival(p0: WeibullParams, n: int, t_max: int) -> NDArray[np.float64]:
    """Return ``P(L0 > t) = exp(-n * theta * t**kappa)`` for ``t = 0..t_max``."""
    t = np.arange(t_max + 1, dtype=np.float64)
    return np.exp(-n * p0.theta * t**p0.kappa)


def q_curve(p0: WeibullParams, cp: CostParams, n: int, b0: NDArray[np.float64]) -> NDArray[np.float64]:
    """Return the time-average cost ``q_t`` for ``t = 1..len(b0) - 1``.

    ``b0[u]`` is the effective replacement cost of a new-farm component at age ``u``.
    """
    t_max = len(b0) - 1
    surv = farm_survival(p0, n, t_max)
    pmf = surv[:-1] - surv[1:]
    t = np.arange(1, t_max + 1, dtype=np.float64)
    failure_costs = cp.g * (1.0 - surv[1:]) + (n - 1) * np.cumsum(b0[1:] * pmf)
    numerator = failure_costs + (cp.h0 + n * b0[1:]) * surv[1:]
    denominator = np.cumsum(t * pmf) + t * surv[1:]
    return numerator / denominator


def monthly_cost_c(
    p0: WeibullParams,
    cp: CostParams,
    n: int,
    t_max: int | None = None,
    *,
    tau_max: int | None = None,
    tol: float = FIXED_POINT_TOLERANCE,
    max_iterations: int = FIXED_POINT_MAX_ITERATIONS,
) -> MonthlyRate:
    """Return the farm monthly cost ``c = min_t q_t`` at the fixed point ``c = Phi(c)``.

    ``Phi`` maps a trial farm rate to ``min_t q_t`` with the effective costs computed at
    its per-component share ``c / n``. Iteration starts from the PM costs. ``Phi`` is
    non-increasing, so when successive steps alternate without shrinking the last two
    iterates bracket the fixed point and Brent's method finishes inside the same
    evaluation budget.

    Raises:
        NonConvergenceError: The fixed point is not reached within ``max_iterations``.
        GridTooShortError: ``q_t`` is minimal at ``t_max`` while ``P(L0 > t_max)`` exceeds ``GRID_TAIL_TOLERANCE``.
    """
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    if t_max is None:
        t_max = default_grid_months(p0)
    if tau_max is None:
        tau_max = t_max
    if t_max < 2:
        raise ValueError(f"t_max must be at least 2, got {t_max}")
    ages = np.arange(t_max + 1, dtype=np.float64)
    evaluations = 0
    last: dict[str, float | int] = {}

    def phi_from(b0: NDArray[np.float64]) -> float:
        nonlocal evaluations
        evaluations += 1
        if evaluations > max_iterations:
            raise NonConvergenceError(
                f"Farm cost rate did not converge within {max_iterations} iterations", iterations=max_iterations
            )
        q = q_curve(p0, cp, n, b0)
        argmin = int(np.argmin(q))
        last["c"], last["t"] = float(q[argmin]), argmin + 1
        return float(q[argmin])

    def phi(c: float) -> float:
        value = phi_from(effective_cost_curve(p0, cp, c / n, ages, tau_max))
        last["anchor"] = c
        return value

    x_prev = phi_from(cp.h + ages * cp.m)
    x = phi(x_prev)
    step_prev = x - x_prev
    logger.debug("Fixed point for c: %.12g -> %.12g", x_prev, x)
    while abs(step_prev) >= tol:
        x_next = phi(x)
        step = x_next - x
        logger.debug("Fixed point for c: %.12g -> %.12g", x, x_next)
        if abs(step) < tol:
            break
        if step * step_prev < 0 and abs(step) > 0.5 * abs(step_prev):
            x = _bracketed_fixed_point(phi, x, x_next, tol, max_iterations - evaluations)
            break
        x_prev, x, step_prev = x, x_next, step

    c_value, planning_interval = float(last["c"]), int(last["t"])
    tail = float(farm_survival(p0, n, t_max)[-1])
    if planning_interval == t_max and tail > GRID_TAIL_TOLERANCE:
        raise GridTooShortError(
            f"q_t is minimal at the end of the grid (t_max={t_max}); increase t_max", t_max=t_max, tail=tail
        )
    logger.info("Farm cost rate c=%.10g at t=%d after %d evaluations", c_value, planning_interval, evaluations)
    return MonthlyRate(
        c=c_value,
        planning_interval=planning_interval,
        iterations=evaluations,
        anchor=float(last["anchor"]),
        components=n,
    )


def _bracketed_fixed_point(phi: Callable[[float], float], a: float, b: float, tol: float, budget: int) -> float:
    logger.debug("Fixed point for c oscillates; bracketing on [%.12g, %.12g]", min(a, b), max(a, b))
    if budget < 2:
        raise NonConvergenceError("Farm cost rate did not converge within the iteration budget")
    lo, hi = min(a, b), max(a, b)
    try:
        root = float(brentq(lambda x: x - phi(x), lo, hi, xtol=tol * 1e-4, maxiter=budget - 1))
    except (RuntimeError, ValueError) as exc:
        raise NonConvergenceError(f"Bracketing the farm cost rate failed: {exc}") from exc
    final = phi(root)
    if abs(final - root) >= tol:
        raise NonConvergenceError(
            "Farm cost rate did not settle within tolerance", residual=abs(final - root), tolerance=tol
        )
    return final


def cost_table(
    p: WeibullParams,
    cp: CostParams,
    rate: MonthlyRate,
    n: int,
    max_month: int,
    tau_max: int | None = None,
) -> pd.DataFrame:
    """Return pm cost, ``b``, ``B`` and ``q_t`` on the grid ``0..max_month`` at rate ``c``.

    ``b`` is evaluated at the share ``c / n`` of each of the ``n`` components.
    """
    if max_month < 1:
        raise ValueError(f"max_month must be at least 1, got {max_month}")
    if tau_max is None:
        tau_max = default_grid_months(p)
    ages = np.arange(max_month + 1, dtype=np.float64)
    pm = cp.h + ages * cp.m
    b = virtual_cost_curve(p, cp, rate.c / n, ages, tau_max)
    effective = np.minimum(pm, b)
    q = np.concatenate([[np.nan], q_curve(p, cp, n, effective)])
    return pd.DataFrame(
        {
            "month": ages.astype(int),
            "pm_cost": pm,
            "virtual_cost": b,
            "effective_cost": effective,
            "q": q,
            "c": np.full(ages.shape, rate.c),
        }
    )
