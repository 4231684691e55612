import math

import numpy as np
import pytest

from pmkit.survival.schemas import AgedComponent, WeibullParams
from pmkit.survival.services import (
    conditional_survival,
    conditional_survival_curve,
    cumulative_hazard,
    discrete_mean_life,
    discrete_pmf,
    discrete_pmf_curve,
    first_failure_survival,
    hazard,
    mean_life,
    median_life,
    survival,
    survival_curve,
)
from tests.conftest import LONG_LIFE, SHORT_LIFE


def test_mean_life_of_fitted_baseline_is_316_months() -> None:
    assert mean_life(LONG_LIFE) == pytest.approx(316, abs=1)


def test_mean_life_of_short_lived_gearbox_is_71_months() -> None:
    assert mean_life(SHORT_LIFE) == pytest.approx(71.4, abs=0.5)


def test_survival_starts_at_one_and_decreases() -> None:
    curve = survival_curve(SHORT_LIFE, np.arange(200))

    assert curve[0] == 1.0
    assert np.all(np.diff(curve) <= 0)


def test_median_life_halves_survival() -> None:
    assert survival(LONG_LIFE, median_life(LONG_LIFE)) == pytest.approx(0.5, rel=1e-12)


def test_cumulative_hazard_is_minus_log_survival() -> None:
    assert cumulative_hazard(SHORT_LIFE, 50.0) == pytest.approx(-math.log(survival(SHORT_LIFE, 50.0)))


def test_hazard_at_zero_depends_on_shape() -> None:
    assert hazard(SHORT_LIFE, 0.0) == 0.0
    assert hazard(WeibullParams(theta=0.01, kappa=1.0), 0.0) == 0.01
    with pytest.raises(ValueError):
        hazard(WeibullParams(theta=0.01, kappa=0.5), 0.0)


def test_hazard_of_exponential_law_is_constant() -> None:
    p = WeibullParams(theta=0.02, kappa=1.0)

    assert hazard(p, 3.0) == pytest.approx(0.02)
    assert hazard(p, 300.0) == pytest.approx(0.02)


def test_negative_time_is_rejected() -> None:
    with pytest.raises(ValueError):
        survival(SHORT_LIFE, -1.0)
    with pytest.raises(ValueError):
        conditional_survival(SHORT_LIFE, -1, 3)


def test_conditional_survival_of_new_component_is_survival() -> None:
    assert conditional_survival(SHORT_LIFE, 0, 40) == pytest.approx(survival(SHORT_LIFE, 40))
    assert conditional_survival(SHORT_LIFE, 80, 0) == 1.0


def test_conditional_survival_stays_finite_for_ancient_components() -> None:
    value = conditional_survival(SHORT_LIFE, 2000, 1)

    assert 0.0 < value < 1.0


def test_discrete_pmf_and_tail_sum_to_one() -> None:
    horizon = 150
    mass = sum(discrete_pmf(SHORT_LIFE, t) for t in range(1, horizon + 1))

    assert mass + survival(SHORT_LIFE, horizon) == pytest.approx(1.0, abs=1e-12)


def test_discrete_pmf_requires_positive_month() -> None:
    with pytest.raises(ValueError):
        discrete_pmf(SHORT_LIFE, 0)


def test_discrete_mean_life_exceeds_continuous_mean_by_half_a_month() -> None:
    assert discrete_mean_life(SHORT_LIFE) - mean_life(SHORT_LIFE) == pytest.approx(0.5, abs=0.05)


def test_first_failure_survival_multiplies_component_survival() -> None:
    old = AgedComponent(params=SHORT_LIFE, age=60)
    new = AgedComponent(params=SHORT_LIFE, age=0)

    expected = conditional_survival(SHORT_LIFE, 60, 12) * survival(SHORT_LIFE, 12)
    assert first_failure_survival([old, new], 12) == pytest.approx(expected)


def test_first_failure_survival_needs_components() -> None:
    with pytest.raises(ValueError):
        first_failure_survival([], 3)


def test_curves_match_scalar_functions() -> None:
    matrix = conditional_survival_curve(LONG_LIFE, [0, 25, 90], 10)
    pmf = discrete_pmf_curve(LONG_LIFE, 10)

    assert matrix.shape == (3, 11)
    assert matrix[1, 7] == pytest.approx(conditional_survival(LONG_LIFE, 25, 7))
    assert pmf[4] == pytest.approx(discrete_pmf(LONG_LIFE, 5))


def test_with_theta_keeps_shape() -> None:
    updated = SHORT_LIFE.with_theta(2e-6)

    assert updated.kappa == SHORT_LIFE.kappa
    assert updated.theta == 2e-6
