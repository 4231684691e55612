"""pmkit command-line entry point."""

import argparse
import logging
import sys
from collections.abc import Sequence
from pathlib import Path

from pydantic import ValidationError

import pmkit.startup  # noqa: F401  # pyright: ignore[reportUnusedImport]
from pmkit import __version__
from pmkit.engine.schemas import PolicyName
from pmkit.shared.errors import EXIT_USAGE, PmkitError, ValidationFailure

from . import commands, io
from .config import validation_failure

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    """Return the parser of all pmkit commands."""
    parser = argparse.ArgumentParser(
        prog="pmkit",
        description="Next preventive maintenance planning for wind farm gearboxes.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)

    estimate = subparsers.add_parser("estimate", help="Fit lifetime and covariate models.")
    estimators = estimate.add_subparsers(dest="estimator", required=True)
    weibull = estimators.add_parser("weibull", help="Censored maximum likelihood fit of the baseline Weibull law.")
    weibull.add_argument("--lifetimes", type=Path, required=True, help="CSV with farm_id,unit_id,event,age_months.")
    weibull.add_argument("--output", type=Path, default=None, help="Output file (default: stdout).")
    weibull.set_defaults(handler=commands.estimate_weibull)

    beta = estimators.add_parser("beta", help="Partial likelihood fit of the Cox coefficient.")
    beta.add_argument("--lifetimes", type=Path, required=True)
    beta.add_argument("--covariates", type=Path, default=None, help="CSV with unit_id,month,value.")
    beta.add_argument("--output", type=Path, default=None)
    beta.set_defaults(handler=commands.estimate_beta)

    factors = estimators.add_parser("factors", help="Cox factor of every failed unit at its failure age.")
    factors.add_argument("--config", type=Path, required=True)
    factors.add_argument("--lifetimes", type=Path, required=True)
    factors.add_argument("--covariates", type=Path, default=None)
    factors.add_argument("--beta", type=float, default=None, help="Overrides the configured beta.")
    factors.add_argument("--output", type=Path, default=None)
    factors.set_defaults(handler=commands.estimate_factors)

    plan = subparsers.add_parser("plan", help="Next PM month and replacement set at the first review.")
    plan.add_argument("--config", type=Path, required=True)
    plan.add_argument("--covariates", type=Path, default=None, help="Covariates for Cox updating of the scales.")
    plan.add_argument("--failed", default=None, help="Return the CM replacement set for this failed unit instead.")
    plan.add_argument("--output", type=Path, default=None)
    plan.set_defaults(handler=commands.plan)

    replay = subparsers.add_parser("replay", help="Replay a failure script through the rolling scheduler.")
    replay.add_argument("--config", type=Path, required=True)
    replay.add_argument("--script", type=Path, required=True, help="CSV with unit_id,failure_age.")
    replay.add_argument("--covariates", type=Path, default=None, help="Default: synthetic covariates.")
    replay.add_argument("--policy", choices=[name.value for name in PolicyName], default=None)
    replay.add_argument("--period", type=int, default=None, help="Period of the fixed_period policy.")
    replay.add_argument("--output", type=Path, default=Path("trajectory.csv"))
    replay.set_defaults(handler=commands.replay)

    simulate = subparsers.add_parser("simulate", help="Monte Carlo evaluation of a maintenance policy.")
    simulate.add_argument("--config", type=Path, required=True)
    simulate.add_argument("--policy", choices=[name.value for name in PolicyName], default=None)
    simulate.add_argument("--period", type=int, default=None)
    simulate.add_argument("--replications", type=int, default=None)
    simulate.add_argument("--seed", type=int, default=None, help="Overrides PMKIT_SEED and the configured seed.")
    simulate.add_argument("--workers", type=int, default=None)
    simulate.add_argument("--output", type=Path, default=None)
    simulate.set_defaults(handler=commands.simulate)

    table = subparsers.add_parser("cost-table", help="Dump pm, virtual and effective costs and q_t as CSV.")
    table.add_argument("--config", type=Path, required=True)
    table.add_argument("--max-month", type=int, default=None)
    table.add_argument("--output", type=Path, default=None)
    table.set_defaults(handler=commands.cost_table_command)
    return parser


def _report(error: PmkitError) -> int:
    sys.stderr.write(io.dumps_json({"error": error.to_dict()}) + "\n")
    return error.exit_code


def main(argv: Sequence[str] | None = None) -> int:
    """Run a pmkit command and return its exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return int(args.handler(args))
    except PmkitError as exc:
        return _report(exc)
    except ValidationError as exc:
        return _report(validation_failure(exc))
    except ValueError as exc:
        return _report(ValidationFailure(str(exc)))
    except Exception as exc:
        logger.exception("Command '%s' failed", args.command)
        return _report(PmkitError(str(exc), exception=type(exc).__name__))


if __name__ == "__main__":
    raise SystemExit(main())
