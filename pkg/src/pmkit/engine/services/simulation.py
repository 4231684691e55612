"""Monte Carlo evaluation of maintenance policies."""

import logging
import math
from concurrent.futures import ProcessPoolExecutor

import numpy as np
from scipy import stats

from pmkit.costs.schemas import MonthlyRate
from pmkit.costs.services import average_params, default_grid_months, monthly_cost_c
from pmkit.shared.errors import ValidationFailure

from ..schemas import Action, FarmScenario, ReplicationResult, SimulationReport, TrajectoryPoint
from .sampling import SampledFailures
from .scheduler import Policy, run_scenario

logger = logging.getLogger(__name__)

CONFIDENCE = 0.95


def summarize_trajectory(points: list[TrajectoryPoint]) -> ReplicationResult:
    """Return the realised totals of one scheduler run."""
    occasions = [point for point in points if point.action != Action.ADVANCE]
    return ReplicationResult(
        total_cost=math.fsum(point.cost for point in occasions),
        cm_count=sum(point.action == Action.CM_EXECUTED for point in occasions),
        pm_count=sum(point.action == Action.PM_EXECUTED for point in occasions),
        replacements=sum(len(point.replaced_ids) for point in occasions),
    )


def _replicate(
    scenario: FarmScenario, policy: Policy, rate: MonthlyRate | None, seed: np.random.SeedSequence
) -> ReplicationResult:
    events = SampledFailures(scenario, np.random.default_rng(seed))
    return summarize_trajectory(run_scenario(scenario, events, policy=policy, rate=rate))


def summarize_replications(
    policy_name: str, horizon_months: int, results: list[ReplicationResult]
) -> SimulationReport:
    """Aggregate replication totals into a report with a 95% t-interval on the mean cost."""
    totals = np.array([result.total_cost for result in results])
    count = len(results)
    mean = float(totals.mean())
    ci_low: float | None = None
    ci_high: float | None = None
    if count > 1:
        half_width = float(stats.t.ppf(0.5 + CONFIDENCE / 2, count - 1) * totals.std(ddof=1) / math.sqrt(count))
        ci_low, ci_high = mean - half_width, mean + half_width
    occasions = sum(result.cm_count + result.pm_count for result in results)
    replacements = sum(result.replacements for result in results)
    return SimulationReport(
        policy=policy_name,
        replications=count,
        horizon_months=horizon_months,
        mean_total_cost=mean,
        ci_low=ci_low,
        ci_high=ci_high,
        mean_cm_count=sum(result.cm_count for result in results) / count,
        mean_pm_count=sum(result.pm_count for result in results) / count,
        mean_replacements_per_occasion=replacements / occasions if occasions else 0.0,
        zero_pm_fraction=sum(result.pm_count == 0 for result in results) / count,
    )


def simulate_farm(
    scenario: FarmScenario,
    policy: Policy,
    replications: int,
    seed: int,
    *,
    workers: int | None = None,
    rate: MonthlyRate | None = None,
) -> SimulationReport:
    """Simulate independent farm histories under a policy and aggregate their costs.

    Replication ``r`` draws from the ``r``-th child of ``SeedSequence(seed)``, so the
    report does not depend on the number of workers or on completion order. The farm
    cost rate is computed from the scenario unless supplied.
    """
    if replications < 1:
        raise ValidationFailure(f"replications must be at least 1, got {replications}")
    if policy.needs_rate and rate is None:
        tau_max = default_grid_months(scenario.baseline) if scenario.tau_max is None else scenario.tau_max
        rate = monthly_cost_c(
            scenario.baseline,
            average_params(scenario.costs),
            len(scenario.farm.units),
            scenario.t_max,
            tau_max=tau_max,
        )
    seeds = np.random.SeedSequence(seed).spawn(replications)
    logger.info("Simulating %d replications of policy %s", replications, policy.name)
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(
                pool.map(
                    _replicate,
                    [scenario] * replications,
                    [policy] * replications,
                    [rate] * replications,
                    seeds,
                )
            )
    else:
        results = [_replicate(scenario, policy, rate, child) for child in seeds]
    horizon = scenario.farm.horizon_month - scenario.farm.start_month
    return summarize_replications(policy.name, horizon, results)
