"""Command handlers: each takes parsed arguments and returns an exit code."""

import argparse
import logging
from pathlib import Path

from pmkit.costs.schemas import MonthlyRate
from pmkit.costs.services import average_params, cost_table, default_grid_months, monthly_cost_c, params_at
from pmkit.engine.services.sampling import ScriptedFailures, synth_covariates
from pmkit.engine.services.scheduler import make_policy, run_scenario
from pmkit.engine.services.simulation import simulate_farm
from pmkit.estimation.schemas import CovariateSeries, CoxModel
from pmkit.estimation.services import (
    cox_training_set,
    failure_cox_factors,
    fit_cox_beta,
    fit_weibull_censored,
    update_theta,
)
from pmkit.planner.schemas import ComponentState, FarmState
from pmkit.planner.services import opportunistic_set, optimize_next_pm
from pmkit.shared.errors import InsufficientCovariatesError, NonConvergenceError, UnknownUnitError
from pmkit.survival.services import mean_life, median_life

from . import io
from .config import RunConfig, load_run_config, resolve_seed

logger = logging.getLogger(__name__)

EXIT_OK = 0


def _tau_max(config: RunConfig) -> int:
    return default_grid_months(config.baseline) if config.tau_max is None else config.tau_max


def _rate(config: RunConfig) -> MonthlyRate:
    return monthly_cost_c(
        config.baseline,
        average_params(config.costs),
        len(config.farm.units),
        config.t_max,
        tau_max=_tau_max(config),
        tol=config.fixed_point_tolerance,
        max_iterations=config.fixed_point_max_iterations,
    )


def _covariates(path: Path | None) -> dict[str, CovariateSeries]:
    return io.parse_covariates_csv(path) if path is not None else {}


def estimate_weibull(args: argparse.Namespace) -> int:
    """Fit the baseline Weibull law to censored lifetimes."""
    fit = fit_weibull_censored(io.parse_lifetimes_csv(args.lifetimes))
    if not fit.converged:
        raise NonConvergenceError(
            "Weibull fit stopped on the parameter box boundary",
            theta=fit.params.theta,
            kappa=fit.params.kappa,
        )
    payload = {
        "theta": fit.params.theta,
        "kappa": fit.params.kappa,
        "loglik": fit.loglik,
        "mean_life_months": mean_life(fit.params),
        "median_life_months": median_life(fit.params),
    }
    io.emit(io.dumps_json(payload), args.output)
    return EXIT_OK


def estimate_beta(args: argparse.Namespace) -> int:
    """Fit the Cox coefficient to the failures with covariate histories."""
    if args.covariates is None:
        raise InsufficientCovariatesError("estimate beta requires --covariates")
    dataset = io.attach_covariates(io.parse_lifetimes_csv(args.lifetimes), _covariates(args.covariates))
    training = cox_training_set(dataset)
    fit = fit_cox_beta(training)
    if not fit.converged:
        raise NonConvergenceError("Partial likelihood is maximised on the boundary", beta=fit.beta)
    payload = {
        "beta": fit.beta,
        "loglik": fit.loglik,
        "flat_likelihood": fit.flat_likelihood,
        "failures_used": len(training.failures),
    }
    io.emit(io.dumps_json(payload), args.output)
    return EXIT_OK


def estimate_factors(args: argparse.Namespace) -> int:
    """Print the Cox factor of every failed unit at its failure age."""
    if args.covariates is None:
        raise InsufficientCovariatesError("estimate factors requires --covariates")
    config = load_run_config(args.config)
    beta = config.beta if args.beta is None else args.beta
    dataset = io.attach_covariates(io.parse_lifetimes_csv(args.lifetimes), _covariates(args.covariates))
    factors = failure_cox_factors(CoxModel(beta=beta, baseline=config.baseline), dataset)
    io.emit(io.dumps_json([factor.model_dump() for factor in factors]), args.output)
    return EXIT_OK


def _review_farm(config: RunConfig, covariates: dict[str, CovariateSeries]) -> FarmState:
    """Return the farm at its first review with Cox-updated scale parameters where covariates exist."""
    model = CoxModel(beta=config.beta, baseline=config.baseline)
    s = config.farm.start_month
    unknown = sorted(set(covariates) - {unit.id for unit in config.farm.units})
    if unknown:
        raise UnknownUnitError(f"Covariates reference unknown units: {', '.join(unknown)}", unit_ids=unknown)
    components = []
    for unit in config.farm.units:
        series = covariates.get(unit.id)
        theta = config.baseline.theta if series is None else update_theta(model, series, s, unit.age).theta
        components.append(ComponentState(id=unit.id, age=unit.age, theta=theta))
    return FarmState(components=components, s=s, T=config.farm.horizon_month, kappa=config.baseline.kappa)


def plan(args: argparse.Namespace) -> int:
    """Print the next-PM decision, or the CM replacement set with ``--failed``."""
    config = load_run_config(args.config)
    fs = _review_farm(config, _covariates(args.covariates))
    rate = _rate(config)
    cp = params_at(config.costs, fs.s)
    if args.failed is not None:
        chosen = opportunistic_set(fs, cp, rate, args.failed, tau_max=_tau_max(config))
        io.emit(io.dumps_json({"replace": chosen, "c": rate.c}), args.output)
        return EXIT_OK
    decision = optimize_next_pm(fs, cp, rate, tau_max=_tau_max(config))
    payload = {
        "t_star": decision.t_star,
        "replace": decision.replace_set,
        "expected_cost": decision.expected_cost,
        "no_pm": decision.no_pm,
        "c": rate.c,
    }
    io.emit(io.dumps_json(payload), args.output)
    return EXIT_OK


def replay(args: argparse.Namespace) -> int:
    """Replay a scripted failure history and write the replanning trajectory."""
    config = load_run_config(args.config)
    unit_ids = [unit.id for unit in config.farm.units]
    covariates = _covariates(args.covariates)
    if not covariates:
        covariates = {
            unit_id: synth_covariates(config.covariate_profile, config.farm.horizon_month, unit_id)
            for unit_id in unit_ids
        }
    script = io.parse_script_csv(args.script, covariates)
    events = ScriptedFailures(script, unit_ids)
    policy = make_policy(args.policy or config.policy, args.period or config.fixed_period)
    rate = _rate(config) if policy.needs_rate else None
    points = run_scenario(config, events, policy=policy, rate=rate)
    io.emit(io.trajectory_csv(points), args.output)
    logger.info("Replay wrote %d reviews to %s", len(points), args.output)
    return EXIT_OK


def simulate(args: argparse.Namespace) -> int:
    """Run Monte Carlo replications of a policy and write the aggregated report."""
    config = load_run_config(args.config)
    policy = make_policy(args.policy or config.policy, args.period or config.fixed_period)
    seed = resolve_seed(args.seed, config)
    rate = _rate(config) if policy.needs_rate else None
    report = simulate_farm(
        config,
        policy,
        args.replications or config.replications,
        seed,
        workers=args.workers or config.workers,
        rate=rate,
    )
    io.emit(io.dumps_json(report), args.output)
    return EXIT_OK


def cost_table_command(args: argparse.Namespace) -> int:
    """Write pm cost, virtual cost, effective cost and q_t per grid month as CSV."""
    config = load_run_config(args.config)
    rate = _rate(config)
    tau_max = _tau_max(config)
    frame = cost_table(
        config.baseline,
        average_params(config.costs),
        rate,
        len(config.farm.units),
        tau_max if args.max_month is None else args.max_month,
        tau_max,
    )
    io.emit(frame.to_csv(index=False, lineterminator="\n", float_format="%.17g"), args.output)
    return EXIT_OK
