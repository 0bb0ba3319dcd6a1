"""Closed-form lower bounds on the risk of unbiased estimators, plus the exact
risk of the observation itself where it is available in closed form.

Infinite bounds are returned as +inf rather than raised: the nonexistence
results surface numerically as divergence of the matching discrete risks.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate

from .energies import MeasureSpec, gaussian_abs_moment, kernel_cell_weight, kernel_double_integral
from .processes import IntensitySpec

__all__ = [
    "l2_bound_gaussian",
    "w_alpha2_bound_gaussian",
    "w_alphap_bound_gaussian",
    "identity_risk_walphap",
    "l2_bound_cox",
    "w_alpha2_bound_cox",
]


def l2_bound_gaussian(measure: MeasureSpec, horizon: float) -> float:
    """int_0^T t mu(dt): T^2/2 for Lebesgue, the exact atom sum otherwise."""
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    if measure.kind == "lebesgue":
        return 0.5 * horizon * horizon
    times = np.array([t for t, _ in measure.atoms])
    weights = np.array([w for _, w in measure.atoms])
    if np.any(times < 0) or np.any(times > horizon):
        raise ValueError("atom times must lie in [0, T]")
    return float(times @ weights)


def w_alpha2_bound_gaussian(horizon: float, alpha: float) -> float:
    """Quadratic fractional bound; attained by the observation, +inf for alpha >= 1/2."""
    return kernel_double_integral(horizon, alpha)


def w_alphap_bound_gaussian(horizon: float, alpha: float, p: float) -> float:
    """Holder-exponent version of the fractional bound for p in (1, inf)."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    if not p > 1.0:
        raise ValueError("p must lie in (1, inf)")
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    if alpha >= 0.5:
        return math.inf
    q = p / (p - 1.0)
    c_q = gaussian_abs_moment(q)
    gap = 0.5 - alpha
    return (
        2.0
        * horizon ** (1.0 - p * alpha + 0.5 * p)
        / (p * gap * (1.0 + p * gap))
        / c_q ** (p / q)
    )


def identity_risk_walphap(horizon: float, alpha: float, p: float) -> float:
    """Exact W^{alpha,p} risk of the estimator X itself:
    c_p * int int |t-s|^(p/2 - p alpha - 1); finite iff alpha < 1/2."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    if not p > 1.0:
        raise ValueError("p must lie in (1, inf)")
    expo = p * alpha + 1.0 - 0.5 * p
    if expo >= 1.0:
        return math.inf
    c_p = gaussian_abs_moment(p)
    return c_p * 2.0 * horizon ** (2.0 - expo) / ((1.0 - expo) * (2.0 - expo))


def l2_bound_cox(intensity: IntensitySpec, measure: MeasureSpec, horizon: float) -> float:
    """int_0^T E[u_t] mu(dt) with u the compensator of the counting model."""
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    if measure.kind == "discrete":
        times = np.array([t for t, _ in measure.atoms])
        weights = np.array([w for _, w in measure.atoms])
        if np.any(times < 0) or np.any(times > horizon):
            raise ValueError("atom times must lie in [0, T]")
        return float(intensity.mean_primitive(times) @ weights)
    value, _ = integrate.quad(
        lambda t: float(intensity.mean_primitive(t)), 0.0, horizon,
        limit=200, epsabs=1e-13, epsrel=1e-12,
    )
    return value


def w_alpha2_bound_cox(intensity: IntensitySpec, horizon: float, alpha: float) -> float:
    """2 int_0^T E[du_r] K(r) dr with K(r) the kernel mass coupling [0,r] to
    [r,T]; +inf for alpha >= 1/2 unless the mean rate vanishes."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    probe = intensity.mean_rate(np.linspace(0.0, horizon, 513))
    if np.any(probe < -1e-12):
        raise ValueError("mean intensity must be nonnegative")
    if not np.any(probe > 0):
        return 0.0
    if alpha >= 0.5:
        return math.inf
    beta = 2.0 * alpha + 1.0

    def integrand(r):
        if r <= 0.0 or r >= horizon:
            return 0.0
        return float(intensity.mean_rate(r)) * kernel_cell_weight((0.0, r), (r, horizon), beta)

    value, _ = integrate.quad(
        integrand, 0.0, horizon, limit=200, epsabs=1e-12, epsrel=1e-10
    )
    return 2.0 * value
