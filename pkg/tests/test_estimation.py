import json
import math

import numpy as np
import pytest

from pmkit.engine.services.sampling import cox_theta_path, sample_lifetime, sample_weibull_months
from pmkit.estimation.schemas import CovariateSeries, CoxModel, FailureRecord, LifetimeDataset, ThetaSource
from pmkit.estimation.services import (
    THETA_BOUNDS,
    cox_factor,
    cox_partial_loglik,
    cox_training_set,
    failure_cox_factors,
    fit_cox_beta,
    fit_weibull_censored,
    first_year_mean,
    moving_average3,
    update_theta,
    weibull_loglik,
)
from pmkit.shared.errors import InsufficientCovariatesError, InsufficientDataError, InsufficientHistoryError
from pmkit.survival.schemas import WeibullParams
from pmkit.survival.services import median_life, survival
from tests.conftest import FIXTURES, SHORT_LIFE


def _series(values: list[float], unit_id: str = "G1") -> CovariateSeries:
    return CovariateSeries(turbine_id=unit_id, start_month=1, values=tuple(values))


def censored_sample(p: WeibullParams, size: int, seed: int, max_limit: int = 120) -> LifetimeDataset:
    """Independently censored lifetimes: every draw is kept and fails when it ends by its censoring limit.

    Lifetimes take one uniform per probability stratum and are paired with uniform limits in ``1..max_limit``.
    """
    rng = np.random.default_rng(seed)
    uniforms = (rng.permutation(size) + rng.random(size)) / size
    lives = np.maximum(1, np.ceil((-np.log1p(-uniforms) / p.theta) ** (1.0 / p.kappa))).astype(np.int64)
    limits = rng.integers(1, max_limit + 1, size=size)
    failed = lives <= limits
    return LifetimeDataset(
        failures=[FailureRecord(unit_id=f"G{i}", failure_age=int(age)) for i, age in enumerate(lives[failed])],
        censored_ages=[int(limit) for limit in limits[~failed]],
    )


def quota_sample(p: WeibullParams, failures: int, censored: int, seed: int, max_limit: int) -> LifetimeDataset:
    """Draws kept until both the failure and the censored counts are filled; the stored golden fit uses it."""
    rng = np.random.default_rng(seed)
    failure_ages: list[int] = []
    censored_ages: list[int] = []
    while len(failure_ages) < failures or len(censored_ages) < censored:
        life = int(sample_weibull_months(p, 1, rng)[0])
        limit = int(rng.integers(1, max_limit + 1))
        if life <= limit and len(failure_ages) < failures:
            failure_ages.append(life)
        elif life > limit and len(censored_ages) < censored:
            censored_ages.append(limit)
    return LifetimeDataset(
        failures=[FailureRecord(unit_id=f"G{i}", failure_age=age) for i, age in enumerate(failure_ages)],
        censored_ages=censored_ages,
    )


def scaled(ds: LifetimeDataset, k: int) -> LifetimeDataset:
    return LifetimeDataset(
        failures=[record.model_copy(update={"failure_age": record.failure_age * k}) for record in ds.failures],
        censored_ages=[age * k for age in ds.censored_ages],
    )


def negated(ds: LifetimeDataset) -> LifetimeDataset:
    failures = []
    for record in ds.failures:
        assert record.covariates is not None
        series = record.covariates.model_copy(update={"values": tuple(-value for value in record.covariates.values)})
        failures.append(record.model_copy(update={"covariates": series}))
    return LifetimeDataset(failures=failures, censored_ages=ds.censored_ages)


def cox_sample(beta: float, failures: int, seed: int) -> LifetimeDataset:
    """Failures whose covariate jumps by a unit-specific offset after the first year."""
    rng = np.random.default_rng(seed)
    months = np.arange(1, 601, dtype=np.int64)
    records: list[FailureRecord] = []
    while len(records) < failures:
        offset = rng.normal(0.0, 5.0)
        values = np.where(months <= 12, 60.0, 60.0 + offset).astype(np.float64)
        thetas = cox_theta_path(SHORT_LIFE.theta, beta, values, months)
        age = sample_lifetime(thetas, SHORT_LIFE.kappa, rng)
        if age is None or age < 3:
            continue
        unit_id = f"G{len(records)}"
        records.append(
            FailureRecord(unit_id=unit_id, failure_age=age, covariates=_series(values[:age].tolist(), unit_id))
        )
    return LifetimeDataset(failures=records)


def test_weibull_loglik_matches_direct_formula() -> None:
    ds = LifetimeDataset(failures=[FailureRecord(unit_id="a", failure_age=30)], censored_ages=[50])
    expected = math.log(survival(SHORT_LIFE, 29) - survival(SHORT_LIFE, 30)) + math.log(survival(SHORT_LIFE, 50))

    assert weibull_loglik(SHORT_LIFE, ds) == pytest.approx(expected, rel=1e-10)


def test_fit_weibull_recovers_generator_parameters() -> None:
    ds = censored_sample(SHORT_LIFE, size=3000, seed=11)

    fit = fit_weibull_censored(ds)

    assert fit.converged
    assert 2.8 <= fit.params.kappa <= 3.2
    assert median_life(fit.params) == pytest.approx(median_life(SHORT_LIFE), rel=0.03)


def test_fit_weibull_is_not_worse_than_generator() -> None:
    ds = censored_sample(SHORT_LIFE, size=250, seed=3)

    fit = fit_weibull_censored(ds)

    assert fit.loglik >= weibull_loglik(SHORT_LIFE, ds) - 1e-9


def test_fit_weibull_requires_a_failure() -> None:
    with pytest.raises(InsufficientDataError):
        fit_weibull_censored(LifetimeDataset(censored_ages=[10, 20]))


def test_fit_weibull_requires_two_observations() -> None:
    with pytest.raises(InsufficientDataError):
        fit_weibull_censored(LifetimeDataset(failures=[FailureRecord(unit_id="a", failure_age=5)]))


def test_censored_sample_keeps_every_draw() -> None:
    ds = censored_sample(SHORT_LIFE, size=500, seed=2024)

    assert len(ds.failures) + len(ds.censored_ages) == 500
    assert 150 <= len(ds.failures) <= 260


def test_fit_weibull_is_accurate_on_a_large_sample() -> None:
    fit = fit_weibull_censored(censored_sample(SHORT_LIFE, size=4000, seed=21))

    assert fit.converged
    assert abs(fit.params.kappa - SHORT_LIFE.kappa) <= 0.15
    assert median_life(fit.params) == pytest.approx(median_life(SHORT_LIFE), rel=0.025)


@pytest.mark.slow
def test_fit_weibull_shape_error_shrinks_with_sample_size() -> None:
    medians = []
    for size in (100, 1000, 10000):
        errors = [
            abs(fit_weibull_censored(censored_sample(SHORT_LIFE, size=size, seed=seed)).params.kappa - SHORT_LIFE.kappa)
            for seed in range(20)
        ]
        medians.append(float(np.median(errors)))

    assert medians[0] > medians[1] > medians[2]


def test_fit_weibull_is_scale_consistent() -> None:
    base = censored_sample(SHORT_LIFE, size=400, seed=5)

    ten = fit_weibull_censored(scaled(base, 10))
    twenty = fit_weibull_censored(scaled(base, 20))

    assert twenty.params.kappa == pytest.approx(ten.params.kappa, abs=5e-3)
    assert median_life(twenty.params) == pytest.approx(2.0 * median_life(ten.params), rel=5e-3)
    assert twenty.params.theta == pytest.approx(ten.params.theta * 2.0 ** -twenty.params.kappa, rel=0.05)


def test_fit_weibull_flags_failures_all_in_the_first_month() -> None:
    ds = LifetimeDataset(failures=[FailureRecord(unit_id=f"u{i}", failure_age=1) for i in range(5)])

    fit = fit_weibull_censored(ds)

    assert fit.at_boundary
    assert not fit.converged
    assert fit.params.theta == pytest.approx(THETA_BOUNDS[1], rel=1e-3)


def test_fit_weibull_reproduces_stored_fit() -> None:
    golden = json.loads((FIXTURES / "weibull_golden.json").read_text(encoding="utf-8"))
    ds = quota_sample(SHORT_LIFE, **golden["sample"])

    fit = fit_weibull_censored(ds)

    assert fit.params.theta == pytest.approx(golden["fit"]["theta"], rel=1e-5)
    assert fit.params.kappa == pytest.approx(golden["fit"]["kappa"], rel=1e-5)
    assert fit.loglik == pytest.approx(golden["fit"]["loglik"], abs=1e-3)
    assert fit == fit_weibull_censored(ds)


def test_first_year_mean_and_moving_average() -> None:
    series = _series([float(v) for v in range(1, 21)])

    assert first_year_mean(series) == pytest.approx(6.5)
    assert moving_average3(series, 15) == pytest.approx(14.0)


def test_first_year_mean_needs_a_full_year() -> None:
    with pytest.raises(InsufficientHistoryError):
        first_year_mean(_series([60.0] * 11))


def test_cox_factor_compares_recent_and_first_year_averages() -> None:
    series = _series([60.0] * 12 + [61.0, 62.0, 63.0])

    assert cox_factor(0.2, series, 15) == pytest.approx(math.exp(0.2 * 2.0))


def test_cox_factor_needs_fifteen_months() -> None:
    with pytest.raises(InsufficientHistoryError):
        cox_factor(0.2, _series([60.0] * 20), 14)


def test_update_theta_keeps_baseline_for_young_components() -> None:
    model = CoxModel(beta=0.2, baseline=SHORT_LIFE)

    updated = update_theta(model, _series([60.0] * 12 + [70.0] * 8), 20, age=2)

    assert updated.theta == SHORT_LIFE.theta
    assert updated.source == ThetaSource.BASELINE


def test_update_theta_with_constant_covariate_is_exactly_baseline() -> None:
    model = CoxModel(beta=0.203, baseline=SHORT_LIFE)

    updated = update_theta(model, _series([60.0] * 30), 30, age=20)

    assert updated.theta == SHORT_LIFE.theta
    assert updated.source == ThetaSource.COX


def test_update_theta_scales_by_cox_factor() -> None:
    model = CoxModel(beta=0.2, baseline=SHORT_LIFE)
    series = _series([60.0] * 12 + [65.0] * 8)

    updated = update_theta(model, series, 20, age=18)

    assert updated.theta == pytest.approx(SHORT_LIFE.theta * math.exp(1.0))


def test_update_theta_falls_back_without_history() -> None:
    model = CoxModel(beta=0.2, baseline=SHORT_LIFE)

    missing = update_theta(model, None, 20, age=18)
    short = update_theta(model, _series([60.0] * 16), 20, age=18)

    assert missing.source == ThetaSource.FALLBACK
    assert short.source == ThetaSource.FALLBACK
    assert short.theta == SHORT_LIFE.theta
    assert short.reason


def test_failure_cox_factors_skip_units_without_history() -> None:
    model = CoxModel(beta=0.2, baseline=SHORT_LIFE)
    ds = LifetimeDataset(
        failures=[
            FailureRecord(unit_id="a", failure_age=16, covariates=_series([60.0] * 13 + [63.0] * 3, "a")),
            FailureRecord(unit_id="b", failure_age=20),
            FailureRecord(unit_id="c", failure_age=10, covariates=_series([60.0] * 10, "c")),
        ]
    )

    factors = failure_cox_factors(model, ds)

    assert factors[0].cox_factor == pytest.approx(math.exp(0.2 * 3.0))
    assert factors[1].cox_factor is None and factors[1].skipped_reason
    assert factors[2].cox_factor is None and factors[2].skipped_reason


def test_cox_partial_loglik_at_zero_counts_risk_sets() -> None:
    ds = LifetimeDataset(
        failures=[
            FailureRecord(unit_id=f"u{age}", failure_age=age, covariates=_series([60.0 + age] * 30, f"u{age}"))
            for age in (10, 20, 25)
        ]
    )

    assert cox_partial_loglik(0.0, ds) == pytest.approx(-(math.log(3) + math.log(2)))


def test_cox_training_set_drops_records_without_usable_history() -> None:
    ds = LifetimeDataset(
        failures=[
            FailureRecord(unit_id="a", failure_age=20, covariates=_series([60.0] * 20, "a")),
            FailureRecord(unit_id="b", failure_age=20),
            FailureRecord(unit_id="c", failure_age=30, covariates=_series([60.0] * 20, "c")),
            FailureRecord(
                unit_id="d",
                failure_age=20,
                covariates=CovariateSeries(turbine_id="d", start_month=5, values=(1.0,) * 20),
            ),
        ],
        censored_ages=[40],
    )

    kept = cox_training_set(ds)

    assert [record.unit_id for record in kept.failures] == ["a"]
    assert kept.censored_ages == [40]


def test_fit_cox_beta_reports_flat_likelihood_for_identical_covariates() -> None:
    ds = LifetimeDataset(
        failures=[
            FailureRecord(unit_id=f"u{age}", failure_age=age, covariates=_series([60.0] * 40, f"u{age}"))
            for age in (15, 18, 22, 30, 35)
        ]
    )

    fit = fit_cox_beta(ds)

    assert fit.flat_likelihood
    assert fit.beta == 0.0


def test_fit_cox_beta_needs_two_failures() -> None:
    ds = LifetimeDataset(failures=[FailureRecord(unit_id="a", failure_age=20, covariates=_series([60.0] * 20))])

    with pytest.raises(InsufficientCovariatesError):
        fit_cox_beta(ds)


def test_fit_cox_beta_needs_covariates() -> None:
    ds = LifetimeDataset(
        failures=[FailureRecord(unit_id="a", failure_age=20), FailureRecord(unit_id="b", failure_age=25)]
    )

    with pytest.raises(InsufficientCovariatesError):
        fit_cox_beta(ds)


def test_fit_cox_beta_recovers_coefficient() -> None:
    fit = fit_cox_beta(cox_sample(0.2, failures=100, seed=5))

    assert fit.converged
    assert not fit.flat_likelihood
    assert 0.1 <= fit.beta <= 0.3


def test_fit_cox_beta_maximises_partial_likelihood() -> None:
    ds = cox_sample(0.2, failures=60, seed=8)

    fit = fit_cox_beta(ds)

    assert fit.loglik >= cox_partial_loglik(fit.beta - 0.01, ds)
    assert fit.loglik >= cox_partial_loglik(fit.beta + 0.01, ds)


def test_cox_partial_loglik_is_concave_in_beta() -> None:
    ds = cox_sample(0.2, failures=60, seed=13)
    betas = np.round(np.arange(-50, 51) * 0.1, 10)

    values = np.array([cox_partial_loglik(float(beta), ds) for beta in betas])

    assert np.all(values[:-2] - 2.0 * values[1:-1] + values[2:] <= 1e-9)


def test_negated_covariates_flip_the_fitted_coefficient() -> None:
    ds = cox_sample(0.2, failures=80, seed=17)

    fit = fit_cox_beta(ds)
    flipped = fit_cox_beta(negated(ds))

    assert fit.beta > 0
    assert flipped.beta == pytest.approx(-fit.beta, abs=1e-6)
    assert cox_partial_loglik(0.15, ds) == pytest.approx(cox_partial_loglik(-0.15, negated(ds)), rel=1e-12)
