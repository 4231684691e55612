"""Rolling-horizon maintenance scheduler with condition-based updating and opportunistic CM."""

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Protocol

from pmkit.costs.schemas import CostParams, CostSetting, MonthlyRate
from pmkit.costs.services import average_params, default_grid_months, monthly_cost_c, params_at
from pmkit.estimation.schemas import CoxModel, ThetaSource
from pmkit.estimation.services import MIN_MONITORING_MONTHS, update_theta
from pmkit.planner.schemas import ComponentState, FarmState, NextPMDecision
from pmkit.planner.services import opportunistic_set, optimize_next_pm
from pmkit.shared.errors import InsufficientCovariatesError, ValidationFailure

from ..schemas import Action, FarmScenario, PolicyName, TrajectoryPoint
from .sampling import FailureSource

logger = logging.getLogger(__name__)

DEFAULT_REVIEW_PERIOD = 3


class Policy(Protocol):
    """Decides the next PM at a review and the replacements at a CM."""

    name: str
    needs_rate: bool

    def plan(self, fs: FarmState, cp: CostParams, rate: MonthlyRate | None, tau_max: int) -> NextPMDecision:
        """Return the next PM decision at review time ``fs.s``."""
        ...

    def at_failure(
        self, fs: FarmState, cp: CostParams, rate: MonthlyRate | None, failed: Sequence[str], tau_max: int
    ) -> list[str]:
        """Return the components replaced at a CM occasion."""
        ...


def _no_pm() -> NextPMDecision:
    return NextPMDecision(expected_cost=math.nan, no_pm=True)


@dataclass(frozen=True)
class Algorithm1Policy:
    """Exact next-PM optimisation with opportunistic replacements at CM."""

    name: str = PolicyName.ALGORITHM1.value
    needs_rate: bool = True

    def plan(self, fs: FarmState, cp: CostParams, rate: MonthlyRate | None, tau_max: int) -> NextPMDecision:
        assert rate is not None
        return optimize_next_pm(fs, cp, rate, tau_max=tau_max)

    def at_failure(
        self, fs: FarmState, cp: CostParams, rate: MonthlyRate | None, failed: Sequence[str], tau_max: int
    ) -> list[str]:
        assert rate is not None
        chosen = set(failed) | set(opportunistic_set(fs, cp, rate, failed[0], tau_max=tau_max))
        return [component_id for component_id in fs.ids if component_id in chosen]


@dataclass(frozen=True)
class CorrectiveOnlyPolicy:
    """Never plans PM; replaces failed components only."""

    name: str = PolicyName.CM_ONLY.value
    needs_rate: bool = False

    def plan(self, fs: FarmState, cp: CostParams, rate: MonthlyRate | None, tau_max: int) -> NextPMDecision:
        return _no_pm()

    def at_failure(
        self, fs: FarmState, cp: CostParams, rate: MonthlyRate | None, failed: Sequence[str], tau_max: int
    ) -> list[str]:
        return [component_id for component_id in fs.ids if component_id in set(failed)]


@dataclass(frozen=True)
class FixedPeriodPolicy:
    """Replaces every component at farm months that are multiples of ``period``."""

    period: int
    name: str = field(default=PolicyName.FIXED_PERIOD.value)
    needs_rate: bool = False

    def __post_init__(self) -> None:
        if self.period < 1:
            raise ValidationFailure(f"period must be at least 1 month, got {self.period}")

    def plan(self, fs: FarmState, cp: CostParams, rate: MonthlyRate | None, tau_max: int) -> NextPMDecision:
        t_star = (fs.s // self.period + 1) * self.period
        if t_star > fs.T:
            return _no_pm()
        return NextPMDecision(t_star=t_star, replace_set=fs.ids, expected_cost=math.nan, no_pm=False)

    def at_failure(
        self, fs: FarmState, cp: CostParams, rate: MonthlyRate | None, failed: Sequence[str], tau_max: int
    ) -> list[str]:
        return [component_id for component_id in fs.ids if component_id in set(failed)]


def make_policy(name: PolicyName | str, period: int | None = None) -> Policy:
    """Return the policy object for a policy name."""
    match PolicyName(name):
        case PolicyName.ALGORITHM1:
            return Algorithm1Policy()
        case PolicyName.CM_ONLY:
            return CorrectiveOnlyPolicy()
        case PolicyName.FIXED_PERIOD:
            if period is None:
                raise ValidationFailure("fixed_period policy requires a period")
            return FixedPeriodPolicy(period=period)


def run_schedule(
    initial: FarmState,
    model: CoxModel,
    costs: CostSetting,
    events: FailureSource,
    review_period: int = DEFAULT_REVIEW_PERIOD,
    *,
    policy: Policy | None = None,
    rate: MonthlyRate | None = None,
    tau_max: int | None = None,
    t_max: int | None = None,
    allow_fallback: bool = True,
) -> list[TrajectoryPoint]:
    """Run the rolling scheduler from review month ``initial.s`` until ``initial.T``.

    Each review updates the scale parameters from the covariates, plans the next PM and
    then executes whichever comes first: a failure no later than the planned month and
    the end of the review period (CM with opportunistic replacements, then an immediate
    replan), the planned PM within the review period, or an advance by one period.

    Raises:
        ValidationFailure: ``initial.s`` is below the first month with Cox factors.
        InsufficientCovariatesError: Covariates are missing and fallback is disabled.
    """
    if initial.s < MIN_MONITORING_MONTHS:
        raise ValidationFailure(f"Scheduling starts at month {MIN_MONITORING_MONTHS} or later, got s={initial.s}")
    if review_period < 1:
        raise ValidationFailure(f"review_period must be at least 1, got {review_period}")
    policy = policy or Algorithm1Policy()
    if tau_max is None:
        tau_max = default_grid_months(model.baseline)
    if policy.needs_rate and rate is None:
        rate = monthly_cost_c(model.baseline, average_params(costs), len(initial.components), t_max, tau_max=tau_max)

    ids = [component.id for component in initial.components]
    ages = {component.id: component.age for component in initial.components}
    failure_month = {component_id: events.install(component_id, initial.s, ages[component_id]) for component_id in ids}
    s, horizon = initial.s, initial.T
    points: list[TrajectoryPoint] = []

    def farm_at(month: int, thetas: dict[str, float]) -> FarmState:
        components = [
            ComponentState(id=component_id, age=ages[component_id], theta=thetas[component_id])
            for component_id in ids
        ]
        return FarmState(components=components, s=month, T=max(horizon, month + 1), kappa=model.baseline.kappa)

    def replace(month: int, replaced: Sequence[str]) -> None:
        for component_id in replaced:
            ages[component_id] = 0
            failure_month[component_id] = events.install(component_id, month, 0)

    while s < horizon:
        thetas: dict[str, float] = {}
        for component_id in ids:
            updated = update_theta(model, events.covariates(component_id), s, ages[component_id])
            if updated.source == ThetaSource.FALLBACK and not allow_fallback:
                raise InsufficientCovariatesError(
                    f"No usable covariates for '{component_id}' at month {s}: {updated.reason}",
                    unit_id=component_id,
                    month=s,
                )
            thetas[component_id] = updated.theta
        review_ages = dict(ages)
        fs = farm_at(s, thetas)
        decision = policy.plan(fs, params_at(costs, s), rate, tau_max)
        planned = decision.t_star if decision.t_star is not None else math.inf
        window_end = min(s + review_period, horizon)
        pending = [month for month in failure_month.values() if month is not None and month > s]
        next_failure = min(pending, default=None)

        if next_failure is not None and next_failure <= min(planned, window_end):
            failed = [component_id for component_id in ids if failure_month[component_id] == next_failure]
            for component_id in ids:
                ages[component_id] += next_failure - s
            cp = params_at(costs, next_failure)
            replaced = policy.at_failure(farm_at(next_failure, thetas), cp, rate, failed, tau_max)
            cost = cp.g * len(failed) + sum(cp.h + ages[j] * cp.m for j in replaced if j not in failed)
            logger.debug("CM at month %d: failed=%s replaced=%s cost=%.6g", next_failure, failed, replaced, cost)
            action, executed_at = Action.CM_EXECUTED, next_failure
            replace(next_failure, replaced)
        elif decision.t_star is not None and decision.t_star <= window_end:
            executed_at = decision.t_star
            for component_id in ids:
                ages[component_id] += executed_at - s
            cp = params_at(costs, executed_at)
            replaced = list(decision.replace_set)
            cost = cp.h0 + sum(cp.h + ages[j] * cp.m for j in replaced)
            logger.debug("PM at month %d: replaced=%s cost=%.6g", executed_at, replaced, cost)
            action = Action.PM_EXECUTED
            replace(executed_at, replaced)
        else:
            executed_at = window_end
            for component_id in ids:
                ages[component_id] += executed_at - s
            action, replaced, cost = Action.ADVANCE, [], 0.0

        points.append(
            TrajectoryPoint(
                s=s,
                t_star=decision.t_star,
                planned_count=len(decision.replace_set),
                action=action,
                executed_at=executed_at,
                replaced_ids=replaced,
                cost=cost,
                ages=review_ages,
            )
        )
        s = executed_at
    return points


def initial_state(scenario: FarmScenario) -> FarmState:
    """Return the farm at its first review with every component on the baseline scale."""
    components = [
        ComponentState(id=unit.id, age=unit.age, theta=scenario.baseline.theta) for unit in scenario.farm.units
    ]
    return FarmState(
        components=components,
        s=scenario.farm.start_month,
        T=scenario.farm.horizon_month,
        kappa=scenario.baseline.kappa,
    )


def run_scenario(
    scenario: FarmScenario,
    events: FailureSource,
    *,
    policy: Policy | None = None,
    rate: MonthlyRate | None = None,
) -> list[TrajectoryPoint]:
    """Run the scheduler with the settings of a scenario."""
    return run_schedule(
        initial_state(scenario),
        CoxModel(beta=scenario.beta, baseline=scenario.baseline),
        scenario.costs,
        events,
        scenario.review_period,
        policy=policy,
        rate=rate,
        tau_max=scenario.tau_max,
        t_max=scenario.t_max,
        allow_fallback=scenario.allow_covariate_fallback,
    )
