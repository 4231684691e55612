"""Exact next-PM optimisation over the planning window ``[s + 1, T]``.

For a fixed PM month the per-component keep/replace choice separates into
``B = min(pm, b)``, so the optimiser only scans the months. The brute-force oracle
enumerates every feasible binary plan with scalar arithmetic and serves as the reference
for the optimiser in tests.
"""

import itertools
import logging
import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from pmkit.costs.schemas import CostParams, MonthlyRate
from pmkit.costs.services import (
    default_grid_months,
    effective_cost_B,
    pm_cost,
    rate_value,
    virtual_cost,
    virtual_cost_lookup,
)
from pmkit.shared.errors import InstanceTooLargeError, UnknownUnitError
from pmkit.survival.services import conditional_survival, conditional_survival_curve

from .schemas import FarmState, FirstFailureLaw, NextPMDecision, PlanArray

logger = logging.getLogger(__name__)

ORACLE_MAX_COMPONENTS = 4
ORACLE_MAX_HORIZON = 8
LINKING_TOLERANCE = 1e-12


def _survival_matrix(fs: FarmState) -> NDArray[np.float64]:
    """Return ``S_j(u)`` for components ``j`` (rows) and ``u = 0..T - s`` (columns)."""
    rows = [
        conditional_survival_curve(component.params(fs.kappa), [component.age], fs.horizon)[0]
        for component in fs.components
    ]
    return np.vstack(rows)


def _attribution_weights(pmf: NDArray[np.float64], survival: NDArray[np.float64]) -> NDArray[np.float64]:
    """Split each month's first-failure mass over the components.

    Weights are proportional to the probability that the component fails alone in that
    month; when those vanish the component pmfs are used, and as a last resort uniform
    weights.
    """
    n = survival.shape[0]
    ones = np.ones((1, survival.shape[1]))
    prefix = np.cumprod(np.vstack([ones, survival[:-1]]), axis=0)
    suffix = np.cumprod(np.vstack([ones, survival[::-1][:-1]]), axis=0)[::-1]
    unique = pmf * prefix * suffix
    weights = np.full(pmf.shape, 1.0 / n)
    for column in range(pmf.shape[1]):
        for source in (unique[:, column], pmf[:, column]):
            mass = source.sum()
            if mass > 0:
                weights[:, column] = source / mass
                break
    return weights


def first_failure_law(fs: FarmState) -> FirstFailureLaw:
    """Return the law of the first failure after ``s`` with per-component attribution."""
    surv = _survival_matrix(fs)
    farm = np.prod(surv, axis=0)
    total = farm[:-1] - farm[1:]
    pmf = surv[:, :-1] - surv[:, 1:]
    weights = _attribution_weights(pmf, surv[:, 1:])
    return FirstFailureLaw(total=total, attribution=(weights * total).T, terminal_survival=float(farm[-1]))


@dataclass(frozen=True)
class _CostTerms:
    """PM, virtual and effective costs of every component at ages ``a_j + u``, ``u = 0..T - s``."""

    pm: NDArray[np.float64]
    virtual: NDArray[np.float64]

    @property
    def effective(self) -> NDArray[np.float64]:
        return np.minimum(self.pm, self.virtual)

    @property
    def replace(self) -> NDArray[np.bool_]:
        return self.pm <= self.virtual


def _grid_months(fs: FarmState, tau_max: int | None) -> int:
    if tau_max is not None:
        return tau_max
    return max(default_grid_months(component.params(fs.kappa)) for component in fs.components)


def _cost_terms(fs: FarmState, cp: CostParams, c: float, tau_max: int | None) -> _CostTerms:
    """Return the cost terms with virtual costs at each component's share of the farm rate ``c``."""
    share, tau_max = c / len(fs.components), _grid_months(fs, tau_max)
    offsets = np.arange(fs.horizon + 1, dtype=np.int64)
    pm_rows, virtual_rows = [], []
    for component in fs.components:
        ages = component.age + offsets
        pm_rows.append(cp.h + ages * cp.m)
        virtual_rows.append(virtual_cost_lookup(component.params(fs.kappa), cp, share, ages, tau_max))
    return _CostTerms(pm=np.vstack(pm_rows), virtual=np.vstack(virtual_rows))


def _failure_branch(
    law: FirstFailureLaw, effective: NDArray[np.float64], cp: CostParams, c: float
) -> NDArray[np.float64]:
    """Return ``Phi(tau)`` for ``tau = 0..T - s``: expected cost of a first failure within ``tau`` months."""
    horizon = len(law.total)
    u = np.arange(1, horizon + 1, dtype=np.float64)
    at_failure = effective[:, 1:]
    step = law.total * (cp.g + (horizon - u) * c + at_failure.sum(axis=0))
    step -= np.sum(law.attribution * at_failure.T, axis=1)
    return np.concatenate([[0.0], np.cumsum(step)])


def _plan_costs(
    fs: FarmState, cp: CostParams, c: float, tau_max: int | None
) -> tuple[NDArray[np.float64], NDArray[np.float64], _CostTerms]:
    """Return ``Phi`` and the expected cost of a PM after ``tau`` months for ``tau = 0..T - s``."""
    law = first_failure_law(fs)
    terms = _cost_terms(fs, cp, c, tau_max)
    effective = terms.effective
    phi = _failure_branch(law, effective, cp, c)
    tau = np.arange(fs.horizon + 1, dtype=np.float64)
    alive = np.prod(_survival_matrix(fs), axis=0)
    renewal = cp.h0 + (fs.horizon - tau) * c + effective.sum(axis=0)
    return phi, phi + alive * renewal, terms


def _check_window(fs: FarmState, t: int) -> int:
    if not fs.s < t <= fs.T:
        raise ValueError(f"t must lie in {fs.s + 1}..{fs.T}, got {t}")
    return t - fs.s


def expected_plan_cost(
    fs: FarmState, cp: CostParams, c: MonthlyRate | float, t: int, *, tau_max: int | None = None
) -> float:
    """Return the expected cost over ``[s, T]`` of planning the next PM at month ``t``."""
    tau = _check_window(fs, t)
    _, plan, _ = _plan_costs(fs, cp, rate_value(c), tau_max)
    return float(plan[tau])


def expected_no_pm_cost(
    fs: FarmState, cp: CostParams, c: MonthlyRate | float, *, tau_max: int | None = None
) -> float:
    """Return the expected cost over ``[s, T]`` when no PM is planned."""
    phi, _, _ = _plan_costs(fs, cp, rate_value(c), tau_max)
    return float(phi[-1])


def optimize_next_pm(
    fs: FarmState, cp: CostParams, c: MonthlyRate | float, *, tau_max: int | None = None
) -> NextPMDecision:
    """Return the expected-cost minimising next PM month and replacement set, or no PM.

    Months at which no component is cheaper to replace than to keep admit no plan.
    Equal costs resolve toward the earlier month, toward replacement, and toward
    planning over not planning.
    """
    phi, plan, terms = _plan_costs(fs, cp, rate_value(c), tau_max)
    replace = terms.replace
    eligible = replace[:, 1:].any(axis=0)
    no_pm_cost = float(phi[-1])
    if not eligible.any():
        logger.debug("No month in %d..%d admits a PM plan", fs.s + 1, fs.T)
        return NextPMDecision(expected_cost=no_pm_cost, no_pm=True)
    candidates = np.where(eligible, plan[1:], np.inf)
    best = int(np.argmin(candidates))
    if no_pm_cost < candidates[best]:
        return NextPMDecision(expected_cost=no_pm_cost, no_pm=True)
    tau = best + 1
    chosen = [component.id for component, keep in zip(fs.components, replace[:, tau], strict=True) if keep]
    return NextPMDecision(t_star=fs.s + tau, replace_set=chosen, expected_cost=float(candidates[best]), no_pm=False)


def brute_force_plan(
    fs: FarmState, cp: CostParams, c: MonthlyRate | float, *, tau_max: int | None = None
) -> NextPMDecision:
    """Enumerate every feasible binary plan and return the cheapest one.

    Planned components are charged their PM cost and kept ones their virtual cost; the
    failure branch charges the effective cost. Small instances only.
    """
    n, horizon = len(fs.components), fs.horizon
    if n > ORACLE_MAX_COMPONENTS or horizon > ORACLE_MAX_HORIZON:
        raise InstanceTooLargeError(
            f"Exhaustive enumeration supports n <= {ORACLE_MAX_COMPONENTS} and T - s <= {ORACLE_MAX_HORIZON}",
            components=n,
            horizon=horizon,
        )
    rate, tau_max = rate_value(c), _grid_months(fs, tau_max)
    share = rate / n
    params = [component.params(fs.kappa) for component in fs.components]
    ages = [component.age for component in fs.components]

    def surv(j: int, u: int) -> float:
        return conditional_survival(params[j], ages[j], u)

    failure_cost = [0.0]
    for u in range(1, horizon + 1):
        before = [surv(j, u - 1) for j in range(n)]
        after = [surv(j, u) for j in range(n)]
        total = math.prod(before) - math.prod(after)
        pmf = [before[j] - after[j] for j in range(n)]
        alone = [pmf[j] * math.prod(after[i] for i in range(n) if i != j) for j in range(n)]
        if sum(alone) > 0:
            weights = [value / sum(alone) for value in alone]
        elif sum(pmf) > 0:
            weights = [value / sum(pmf) for value in pmf]
        else:
            weights = [1.0 / n] * n
        step = 0.0
        for gamma in range(n):
            others = sum(
                effective_cost_B(params[j], cp, share, ages[j] + u, tau_max) for j in range(n) if j != gamma
            )
            step += total * weights[gamma] * (cp.g + (horizon - u) * rate + others)
        failure_cost.append(failure_cost[-1] + step)

    best_cost, best = math.inf, NextPMDecision(expected_cost=failure_cost[-1], no_pm=True)
    for tau in range(1, horizon + 1):
        alive = math.prod(surv(j, tau) for j in range(n))
        pm = [pm_cost(cp, ages[j] + tau) for j in range(n)]
        virtual = [virtual_cost(params[j], cp, share, ages[j] + tau, tau_max) for j in range(n)]
        for size in range(n, 0, -1):
            for planned in itertools.combinations(range(n), size):
                linked = all(pm[j] <= virtual[j] if j in planned else virtual[j] <= pm[j] for j in range(n))
                if not linked:
                    continue
                renewal = cp.h0 + (horizon - tau) * rate
                renewal += sum(pm[j] if j in planned else virtual[j] for j in range(n))
                cost = failure_cost[tau] + alive * renewal
                if cost < best_cost:
                    best_cost = cost
                    best = NextPMDecision(
                        t_star=fs.s + tau,
                        replace_set=[fs.components[j].id for j in planned],
                        expected_cost=cost,
                        no_pm=False,
                    )
    if failure_cost[-1] < best_cost:
        return NextPMDecision(expected_cost=failure_cost[-1], no_pm=True)
    return best


def opportunistic_set(
    fs: FarmState, cp: CostParams, c: MonthlyRate | float, failed_id: str, *, tau_max: int | None = None
) -> list[str]:
    """Return the failed component plus every component whose virtual cost reaches its PM cost."""
    if failed_id not in fs.ids:
        raise UnknownUnitError(f"Unknown component id '{failed_id}'", unit_id=failed_id)
    share, tau_max = rate_value(c) / len(fs.components), _grid_months(fs, tau_max)
    chosen: list[str] = []
    for component in fs.components:
        if component.id == failed_id:
            chosen.append(component.id)
            continue
        b = float(virtual_cost_lookup(component.params(fs.kappa), cp, share, [component.age], tau_max)[0])
        if b >= pm_cost(cp, component.age):
            chosen.append(component.id)
    return chosen


def decode_plan(fs: FarmState, decision: NextPMDecision) -> PlanArray:
    """Return the binary arrays ``w``, ``y`` and ``z`` encoded by a decision."""
    months = list(range(fs.s + 1, fs.T + 1))
    y = [int(t == decision.t_star) for t in months]
    chosen = set(decision.replace_set)
    w = {
        component.id: [int(t == decision.t_star and component.id in chosen) for t in months]
        for component in fs.components
    }
    return PlanArray(months=months, w=w, y=y, z=int(decision.no_pm))


def check_constraints(
    fs: FarmState,
    plan: PlanArray,
    cp: CostParams,
    c: MonthlyRate | float,
    *,
    tau_max: int | None = None,
) -> list[str]:
    """Return the violated constraints of a binary plan; an empty list means feasible.

    Checks that replacements only happen at the planned month, that a planned month
    replaces something, that at most one month is planned unless no PM is chosen, and
    that each component's charge equals its effective cost at the planned month.
    """
    violations: list[str] = []
    terms = _cost_terms(fs, cp, rate_value(c), tau_max)
    effective = terms.effective
    if sum(plan.y) != 1 - plan.z:
        violations.append(f"sum of y is {sum(plan.y)} but 1 - z is {1 - plan.z}")
    for column, t in enumerate(plan.months):
        tau = t - fs.s
        y = plan.y[column]
        planned = 0
        for j, component in enumerate(fs.components):
            w = plan.w[component.id][column]
            planned += w
            if w > y:
                violations.append(f"{component.id} replaced at month {t} without a planned occasion")
            charged = terms.pm[j, tau] * w + terms.virtual[j, tau] * (y - w)
            target = effective[j, tau] * y
            if abs(charged - target) > LINKING_TOLERANCE * max(1.0, abs(target)):
                violations.append(f"{component.id} at month {t} is charged {charged!r}, effective cost is {target!r}")
        if planned < y:
            violations.append(f"occasion at month {t} replaces no component")
    return violations
