"""Fitting the baseline Weibull law and the Cox coefficient, and Cox updating of theta."""

import logging
import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy.optimize import brentq, minimize_scalar, root_scalar
from scipy.special import logsumexp

from pmkit.shared.errors import (
    InsufficientCovariatesError,
    InsufficientDataError,
    InsufficientHistoryError,
)
from pmkit.survival.schemas import WeibullParams

from .schemas import (
    CovariateSeries,
    CoxFit,
    CoxModel,
    FailureCoxFactor,
    FailureRecord,
    LifetimeDataset,
    ThetaSource,
    ThetaUpdate,
    WeibullFit,
)

logger = logging.getLogger(__name__)

FIRST_YEAR_MONTHS = 12
MOVING_AVERAGE_MONTHS = 3
MIN_MONITORING_MONTHS = 15
BASELINE_AGE_LIMIT = 2

THETA_BOUNDS = (1e-10, 1.0)
KAPPA_BOUNDS = (0.1, 10.0)
BETA_BOUNDS = (-10.0, 10.0)
VERIFICATION_GRID_SIZE = 200
# An estimate this close to an edge of the box, in verification-grid steps, is reported as on the boundary.
BOUNDARY_GRID_STEPS = 1e-3
RESTARTS = 3
PARAM_TOLERANCE = 1e-10
BETA_TOLERANCE = 1e-8
FLAT_GRADIENT = 1e-12


# -- censored Weibull likelihood ---------------------------------------------------


@dataclass(frozen=True)
class _Observations:
    """Failure and censoring ages collapsed to unique values with multiplicities."""

    failure_ages: NDArray[np.float64]
    failure_counts: NDArray[np.float64]
    censored_ages: NDArray[np.float64]
    censored_counts: NDArray[np.float64]

    @classmethod
    def from_dataset(cls, ds: LifetimeDataset) -> "_Observations":
        fa, fc = np.unique(np.asarray(ds.failure_ages, dtype=np.float64), return_counts=True)
        ca, cc = np.unique(np.asarray(ds.censored_ages, dtype=np.float64), return_counts=True)
        return cls(fa, fc.astype(np.float64), ca, cc.astype(np.float64))

    def loglik(self, theta: NDArray[np.float64], kappa: NDArray[np.float64]) -> NDArray[np.float64]:
        """Evaluate the log-likelihood for broadcastable arrays of parameters."""
        theta = theta[..., None]
        kappa = kappa[..., None]
        v = self.failure_ages
        upper = v**kappa
        lower = (v - 1.0) ** kappa
        with np.errstate(divide="ignore"):
            # log(S(v-1) - S(v)) = -theta (v-1)^k + log(1 - exp(-theta (v^k - (v-1)^k)))
            log_pmf = -theta * lower + np.log(-np.expm1(-theta * (upper - lower)))
        failed = np.sum(self.failure_counts * log_pmf, axis=-1)
        censored = -np.sum(self.censored_counts * theta * self.censored_ages**kappa, axis=-1)
        return failed + censored


def weibull_loglik(p: WeibullParams, ds: LifetimeDataset) -> float:
    """Return the censored monthly log-likelihood of ``p`` on ``ds``.

    Returns ``-inf`` when a failure term underflows to probability zero.
    """
    obs = _Observations.from_dataset(ds)
    value = float(obs.loglik(np.asarray(p.theta), np.asarray(p.kappa)))
    if math.isinf(value):
        logger.warning("Weibull log-likelihood is -inf at theta=%g kappa=%g", p.theta, p.kappa)
    return value


def fit_weibull_censored(
    ds: LifetimeDataset,
    *,
    theta_bounds: tuple[float, float] = THETA_BOUNDS,
    kappa_bounds: tuple[float, float] = KAPPA_BOUNDS,
    restarts: int = RESTARTS,
) -> WeibullFit:
    """Maximise the censored Weibull likelihood over the parameter box.

    A log-spaced verification grid seeds ``restarts`` nested golden-section refinements
    (outer over kappa, inner over log theta). The returned estimate is never worse than
    the best grid point.
    """
    if not ds.failures:
        raise InsufficientDataError("At least one failure is required to fit a Weibull law")
    if len(ds.failures) + len(ds.censored_ages) < 2:
        raise InsufficientDataError("At least two observations are required to fit a Weibull law")

    obs = _Observations.from_dataset(ds)
    log_lo, log_hi = math.log(theta_bounds[0]), math.log(theta_bounds[1])
    log_thetas = np.linspace(log_lo, log_hi, VERIFICATION_GRID_SIZE)
    kappas = np.geomspace(kappa_bounds[0], kappa_bounds[1], VERIFICATION_GRID_SIZE)
    surface = np.stack([obs.loglik(np.exp(log_thetas), np.full_like(log_thetas, k)) for k in kappas])
    surface = np.where(np.isnan(surface), -np.inf, surface)

    def profile(kappa: float) -> tuple[float, float]:
        inner = minimize_scalar(
            lambda lt: -float(obs.loglik(np.asarray(math.exp(lt)), np.asarray(kappa))),
            bounds=(log_lo, log_hi),
            method="bounded",
            options={"xatol": PARAM_TOLERANCE},
        )
        return float(inner.x), -float(inner.fun)

    best_log_theta, best_kappa, best_value = 0.0, 0.0, -math.inf
    order = np.argsort(surface, axis=None)[::-1][:restarts]
    for flat_index in order:
        row, _ = np.unravel_index(flat_index, surface.shape)
        k_lo = kappas[max(row - 1, 0)]
        k_hi = kappas[min(row + 1, len(kappas) - 1)]
        outer = minimize_scalar(
            lambda k: -profile(k)[1],
            bounds=(float(k_lo), float(k_hi)),
            method="bounded",
            options={"xatol": PARAM_TOLERANCE},
        )
        kappa = float(outer.x)
        log_theta, value = profile(kappa)
        logger.debug("Weibull restart from grid row %d: kappa=%.6g loglik=%.10g", row, kappa, value)
        if value > best_value:
            best_log_theta, best_kappa, best_value = log_theta, kappa, value

    grid_row, grid_col = np.unravel_index(int(np.argmax(surface)), surface.shape)
    if surface[grid_row, grid_col] > best_value:
        best_log_theta = float(log_thetas[grid_col])
        best_kappa = float(kappas[grid_row])
        best_value = float(surface[grid_row, grid_col])

    at_boundary = _near(best_log_theta, log_lo, log_hi) or _near(
        math.log(best_kappa), math.log(kappa_bounds[0]), math.log(kappa_bounds[1])
    )
    if at_boundary:
        logger.warning(
            "Weibull fit stopped on the parameter box boundary (theta=%g, kappa=%g)",
            math.exp(best_log_theta),
            best_kappa,
        )
    return WeibullFit(
        params=WeibullParams(theta=math.exp(best_log_theta), kappa=best_kappa),
        loglik=best_value,
        converged=not at_boundary,
        at_boundary=at_boundary,
    )


def _near(value: float, lo: float, hi: float) -> bool:
    """Whether ``value`` lies within a fraction of one verification-grid step of ``lo`` or ``hi``."""
    tol = BOUNDARY_GRID_STEPS * (hi - lo) / (VERIFICATION_GRID_SIZE - 1)
    return abs(value - lo) < tol or abs(value - hi) < tol


# -- covariate summaries and Cox factors --------------------------------------------


def first_year_mean(s: CovariateSeries) -> float:
    """Return the average of the covariate over operation months 1..12."""
    if s.start_month != 1 or len(s.values) < FIRST_YEAR_MONTHS:
        raise InsufficientHistoryError(
            f"Series '{s.turbine_id}' does not cover the first {FIRST_YEAR_MONTHS} months of operation",
            turbine_id=s.turbine_id,
        )
    return float(np.mean(s.values[:FIRST_YEAR_MONTHS]))


def moving_average3(s: CovariateSeries, t: int) -> float:
    """Return the three-month moving average ending at month ``t``."""
    return float(np.mean(s.window(t - MOVING_AVERAGE_MONTHS + 1, t)))


def cox_factor(beta: float, s: CovariateSeries, t: int) -> float:
    """Return ``exp(beta * (moving_average3(s, t) - first_year_mean(s)))``."""
    if t < MIN_MONITORING_MONTHS:
        raise InsufficientHistoryError(
            f"Cox updating needs {MIN_MONITORING_MONTHS} months of operation, got t={t}",
            turbine_id=s.turbine_id,
            month=t,
        )
    return math.exp(beta * (moving_average3(s, t) - first_year_mean(s)))


def update_theta(model: CoxModel, s: CovariateSeries | None, t: int, age: int) -> ThetaUpdate:
    """Return the scale parameter of a component of age ``age`` reviewed at month ``t``.

    Components aged two months or less keep the baseline. Otherwise the baseline is
    scaled by the Cox factor; missing history falls back to the baseline.
    """
    theta0 = model.baseline.theta
    if age <= BASELINE_AGE_LIMIT:
        return ThetaUpdate(theta=theta0, source=ThetaSource.BASELINE)
    if s is None:
        logger.warning("No covariate series at month %d; using baseline theta", t)
        return ThetaUpdate(theta=theta0, source=ThetaSource.FALLBACK, reason="no covariate series")
    try:
        factor = cox_factor(model.beta, s, t)
    except InsufficientHistoryError as exc:
        logger.warning("Cox update for '%s' at month %d fell back to baseline: %s", s.turbine_id, t, exc.message)
        return ThetaUpdate(theta=theta0, source=ThetaSource.FALLBACK, reason=exc.message)
    return ThetaUpdate(theta=theta0 * factor, source=ThetaSource.COX)


def failure_cox_factors(model: CoxModel, ds: LifetimeDataset) -> list[FailureCoxFactor]:
    """Return the Cox factor of every failed unit at its failure age."""
    factors: list[FailureCoxFactor] = []
    for record in ds.failures:
        if record.covariates is None:
            factors.append(
                FailureCoxFactor(
                    unit_id=record.unit_id, failure_age=record.failure_age, skipped_reason="no covariate series"
                )
            )
            continue
        try:
            value = cox_factor(model.beta, record.covariates, record.failure_age)
        except InsufficientHistoryError as exc:
            factors.append(
                FailureCoxFactor(unit_id=record.unit_id, failure_age=record.failure_age, skipped_reason=exc.message)
            )
            continue
        factors.append(FailureCoxFactor(unit_id=record.unit_id, failure_age=record.failure_age, cox_factor=value))
    return factors


# -- Cox partial likelihood ------------------------------------------------------------


@dataclass(frozen=True)
class _RiskSets:
    """Moving averages of every risk-set member at every failure time.

    Row ``j`` holds ``x^(i)(v_j)`` for the failures ``i`` with ``v_i >= v_j``; ``mask``
    marks risk-set membership (ties share the full risk set).
    """

    own: NDArray[np.float64]
    values: NDArray[np.float64]
    mask: NDArray[np.bool_]

    @classmethod
    def from_dataset(cls, ds: LifetimeDataset) -> "_RiskSets":
        failures = sorted(ds.failures, key=lambda record: record.failure_age)
        missing = [record.unit_id for record in failures if record.covariates is None]
        if missing:
            raise InsufficientCovariatesError(
                f"{len(missing)} failure record(s) have no covariate series", unit_ids=missing
            )
        ages = np.array([record.failure_age for record in failures])
        mask = ages[None, :] >= ages[:, None]
        values = np.zeros(mask.shape, dtype=np.float64)
        for j, record in enumerate(failures):
            for i in np.flatnonzero(mask[j]):
                series = failures[i].covariates
                assert series is not None
                values[j, i] = moving_average3(series, record.failure_age)
        return cls(own=np.diag(values).copy(), values=values, mask=mask)

    def loglik(self, beta: float) -> float:
        eta = beta * self.values
        return float(np.sum(beta * self.own - logsumexp(eta, axis=1, b=self.mask)))

    def _weights(self, beta: float) -> NDArray[np.float64]:
        eta = np.where(self.mask, beta * self.values, -np.inf)
        eta = eta - eta.max(axis=1, keepdims=True)
        w = np.exp(eta)
        return w / w.sum(axis=1, keepdims=True)

    def score(self, beta: float) -> float:
        w = self._weights(beta)
        return float(np.sum(self.own - np.sum(w * self.values, axis=1)))

    def information(self, beta: float) -> float:
        w = self._weights(beta)
        first = np.sum(w * self.values, axis=1)
        second = np.sum(w * self.values**2, axis=1)
        return float(np.sum(second - first**2))


def cox_partial_loglik(beta: float, ds: LifetimeDataset) -> float:
    """Return the log partial likelihood of ``beta``; risk sets hold failed units only."""
    return _RiskSets.from_dataset(ds).loglik(beta)


def cox_training_set(ds: LifetimeDataset) -> LifetimeDataset:
    """Keep the failures whose covariate history starts at month 1 and covers the failure age."""
    kept: list[FailureRecord] = []
    for record in ds.failures:
        series = record.covariates
        if series is None or series.start_month != 1 or series.end_month < record.failure_age:
            continue
        if record.failure_age < MOVING_AVERAGE_MONTHS:
            continue
        kept.append(record)
    dropped = len(ds.failures) - len(kept)
    if dropped:
        logger.info("Cox training set keeps %d of %d failures", len(kept), len(ds.failures))
    return LifetimeDataset(failures=kept, censored_ages=ds.censored_ages)


def fit_cox_beta(
    ds: LifetimeDataset,
    *,
    bounds: tuple[float, float] = BETA_BOUNDS,
    tol: float = BETA_TOLERANCE,
) -> CoxFit:
    """Maximise the partial likelihood by Newton's method with a bracketing fallback."""
    if len(ds.failures) < 2:
        raise InsufficientCovariatesError(
            f"At least two failures with covariate histories are required, got {len(ds.failures)}"
        )
    risk = _RiskSets.from_dataset(ds)
    lo, hi = bounds

    checkpoints = np.linspace(lo, hi, 21)
    if max(abs(risk.score(float(b))) for b in checkpoints) < FLAT_GRADIENT:
        logger.info("Partial likelihood is flat in beta; returning beta=0")
        return CoxFit(beta=0.0, loglik=risk.loglik(0.0), flat_likelihood=True)

    beta: float | None = None
    if risk.information(0.0) > 0:
        try:
            with np.errstate(all="ignore"):
                solution = root_scalar(
                    risk.score,
                    fprime=lambda b: -risk.information(b),
                    x0=0.0,
                    method="newton",
                    xtol=tol,
                    maxiter=50,
                )
            if solution.converged and lo <= solution.root <= hi and math.isfinite(solution.root):
                beta = float(solution.root)
        except (RuntimeError, ZeroDivisionError, OverflowError):
            logger.debug("Newton iteration for beta failed; bracketing instead")

    if beta is None:
        score_lo, score_hi = risk.score(lo), risk.score(hi)
        if score_lo > 0 and score_hi > 0 or score_lo < 0 and score_hi < 0:
            edge = hi if score_hi > 0 else lo
            logger.warning("Partial likelihood is maximised on the boundary beta=%g", edge)
            return CoxFit(beta=edge, loglik=risk.loglik(edge), converged=False)
        beta = float(brentq(risk.score, lo, hi, xtol=tol))

    return CoxFit(beta=beta, loglik=risk.loglik(beta))
