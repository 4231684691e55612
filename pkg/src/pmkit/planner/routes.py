"""FastAPI routes for next-PM plans."""

from fastapi import APIRouter, HTTPException

from pmkit.costs.schemas import MonthlyRate
from pmkit.costs.services import average_params, default_grid_months, monthly_cost_c, params_at
from pmkit.planner import services
from pmkit.planner.schemas import (
    ComponentState,
    FarmState,
    OpportunisticRequest,
    OpportunisticResponse,
    PlanRequest,
    PlanResponse,
)
from pmkit.shared.errors import EXIT_USAGE, PmkitError

router = APIRouter()


@router.post("", response_model=PlanResponse)
def create_plan(request: PlanRequest) -> PlanResponse:
    """Compute the expected-cost minimising next PM for the submitted farm."""
    fs, rate, tau_max = _prepare_or_raise(request)
    try:
        decision = services.optimize_next_pm(fs, params_at(request.costs, request.s), rate, tau_max=tau_max)
    except PmkitError as exc:
        raise _as_http_error(exc) from exc
    return PlanResponse(
        t_star=decision.t_star,
        replace=decision.replace_set,
        expected_cost=decision.expected_cost,
        no_pm=decision.no_pm,
        c=rate.c,
    )


@router.post("/opportunistic", response_model=OpportunisticResponse)
def create_opportunistic_plan(request: OpportunisticRequest) -> OpportunisticResponse:
    """Return the components to replace together with a failed one."""
    fs, rate, tau_max = _prepare_or_raise(request)
    try:
        chosen = services.opportunistic_set(
            fs, params_at(request.costs, request.s), rate, request.failed_id, tau_max=tau_max
        )
    except PmkitError as exc:
        raise _as_http_error(exc) from exc
    return OpportunisticResponse(replace=chosen, c=rate.c)


def _prepare_or_raise(request: PlanRequest) -> tuple[FarmState, MonthlyRate, int]:
    try:
        fs = FarmState(
            components=[
                ComponentState(id=unit.id, age=unit.age, theta=unit.theta or request.baseline.theta)
                for unit in request.units
            ],
            s=request.s,
            T=request.T,
            kappa=request.baseline.kappa,
        )
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    tau_max = default_grid_months(request.baseline) if request.tau_max is None else request.tau_max
    try:
        rate = monthly_cost_c(
            request.baseline, average_params(request.costs), len(fs.components), request.t_max, tau_max=tau_max
        )
    except PmkitError as exc:
        raise _as_http_error(exc) from exc
    return fs, rate, tau_max


def _as_http_error(exc: PmkitError) -> HTTPException:
    status_code = 422 if exc.exit_code == EXIT_USAGE else 500
    return HTTPException(status_code=status_code, detail=exc.to_dict())
