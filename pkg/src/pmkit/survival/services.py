"""Survival, hazard and discrete failure probabilities of Weibull components.

Scalar functions follow the monthly grid used everywhere downstream; the ``*_curve``
variants evaluate the same quantities over numpy arrays for the cost and planning code.
"""

import math
from collections.abc import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.special import gamma

from .schemas import AgedComponent, WeibullParams


def survival(p: WeibullParams, t: float) -> float:
    """Return ``P(L > t) = exp(-theta * t**kappa)``."""
    if t < 0:
        raise ValueError(f"t must be non-negative, got {t}")
    return math.exp(-p.theta * t**p.kappa)


def hazard(p: WeibullParams, t: float) -> float:
    """Return the failure rate ``theta * kappa * t**(kappa - 1)`` at age ``t``."""
    if t < 0:
        raise ValueError(f"t must be non-negative, got {t}")
    if t == 0:
        if p.kappa < 1:
            raise ValueError("hazard is unbounded at t=0 when kappa < 1")
        if p.kappa > 1:
            return 0.0
        return p.theta
    return p.theta * p.kappa * t ** (p.kappa - 1)


def cumulative_hazard(p: WeibullParams, t: float) -> float:
    """Return ``theta * t**kappa``, i.e. ``-log survival(p, t)``."""
    if t < 0:
        raise ValueError(f"t must be non-negative, got {t}")
    return p.theta * t**p.kappa


def conditional_survival(p: WeibullParams, a: int, t: int) -> float:
    """Return ``P(L > a + t | L > a)`` for a component of age ``a``."""
    if a < 0 or t < 0:
        raise ValueError(f"age and horizon must be non-negative, got a={a}, t={t}")
    # Ratio form exp(theta * (a^k - (a+t)^k)); stays finite when survival(p, a) underflows.
    return math.exp(-p.theta * ((a + t) ** p.kappa - a**p.kappa))


def discrete_pmf(p: WeibullParams, t: int) -> float:
    """Return ``P(L = t)`` on the monthly grid, ``S(t - 1) - S(t)``."""
    if t < 1:
        raise ValueError(f"t must be at least 1, got {t}")
    return survival(p, t - 1) - survival(p, t)


def first_failure_survival(components: Sequence[AgedComponent], t: int) -> float:
    """Return the probability that none of the independent components fails within ``t`` months."""
    if not components:
        raise ValueError("at least one component is required")
    result = 1.0
    for component in components:
        result *= conditional_survival(component.params, component.age, t)
    return result


def mean_life(p: WeibullParams) -> float:
    """Return the mean life length ``theta**(-1/kappa) * Gamma(1 + 1/kappa)`` in months."""
    return float(p.theta ** (-1.0 / p.kappa) * gamma(1.0 + 1.0 / p.kappa))


def median_life(p: WeibullParams) -> float:
    """Return the median life length ``(log 2 / theta)**(1/kappa)`` in months."""
    return (math.log(2.0) / p.theta) ** (1.0 / p.kappa)


def discrete_mean_life(p: WeibullParams, max_months: int = 100_000) -> float:
    """Return ``E[L]`` for the month-rounded life length, ``sum_{t >= 0} S(t)``."""
    return float(survival_curve(p, np.arange(max_months + 1)).sum())


def survival_curve(p: WeibullParams, t: ArrayLike) -> NDArray[np.float64]:
    """Vectorised :func:`survival`."""
    grid = np.asarray(t, dtype=np.float64)
    if np.any(grid < 0):
        raise ValueError("t must be non-negative")
    return np.exp(-p.theta * grid**p.kappa)


def conditional_survival_curve(p: WeibullParams, ages: ArrayLike, horizon: int) -> NDArray[np.float64]:
    """Return ``S_a(u)`` for every age in ``ages`` (rows) and ``u = 0..horizon`` (columns)."""
    if horizon < 0:
        raise ValueError(f"horizon must be non-negative, got {horizon}")
    a = np.atleast_1d(np.asarray(ages, dtype=np.float64))[:, None]
    if np.any(a < 0):
        raise ValueError("ages must be non-negative")
    u = np.arange(horizon + 1, dtype=np.float64)[None, :]
    return np.exp(-p.theta * ((a + u) ** p.kappa - a**p.kappa))


def discrete_pmf_curve(p: WeibullParams, t_max: int) -> NDArray[np.float64]:
    """Return ``P(L = t)`` for ``t = 1..t_max``."""
    surv = survival_curve(p, np.arange(t_max + 1))
    return surv[:-1] - surv[1:]
