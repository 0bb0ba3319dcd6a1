import math

import numpy as np
import pytest

from frac_stein.bounds import (
    identity_risk_walphap,
    l2_bound_cox,
    l2_bound_gaussian,
    w_alpha2_bound_cox,
    w_alpha2_bound_gaussian,
    w_alphap_bound_gaussian,
)
from frac_stein.energies import MeasureSpec
from frac_stein.processes import DriftSpec, IntensitySpec


class TestL2Gaussian:
    def test_lebesgue(self):
        assert l2_bound_gaussian(MeasureSpec.lebesgue(), 1.0) == 0.5
        assert l2_bound_gaussian(MeasureSpec.lebesgue(), 2.0) == 2.0

    def test_atom_at_horizon(self):
        assert l2_bound_gaussian(MeasureSpec.discrete([(1.0, 1.0)]), 1.0) == 1.0


class TestFractionalGaussian:
    def test_quadratic_reference(self):
        assert w_alpha2_bound_gaussian(1.0, 0.25) == pytest.approx(8.0 / 3.0, rel=1e-12)
        assert w_alpha2_bound_gaussian(1.0, 0.75) == math.inf

    def test_small_alpha_limit(self):
        assert w_alpha2_bound_gaussian(1.0, 1e-9) == pytest.approx(1.0, rel=1e-6)

    def test_p2_consistency_sweep(self):
        for horizon in (0.5, 1.0, 2.0):
            for alpha in np.arange(0.05, 0.46, 0.05):
                quadratic = w_alpha2_bound_gaussian(horizon, float(alpha))
                general = w_alphap_bound_gaussian(horizon, float(alpha), 2.0)
                assert abs(general - quadratic) <= 1e-12 * quadratic

    def test_p4_reference(self):
        # 1/c_{4/3}^3 with c_{4/3} = 2^{2/3} Gamma(7/6)/sqrt(pi)
        value = w_alphap_bound_gaussian(1.0, 0.25, 4.0)
        assert value == pytest.approx(1.7434720745319843, rel=1e-10)

    def test_infinite_above_half(self):
        assert w_alphap_bound_gaussian(1.0, 0.6, 4.0) == math.inf

    def test_horizon_scaling(self):
        # l2 ~ T^2 and the quadratic fractional bound ~ T^(2-2 alpha)
        assert l2_bound_gaussian(MeasureSpec.lebesgue(), 2.0) == pytest.approx(
            4.0 * l2_bound_gaussian(MeasureSpec.lebesgue(), 1.0)
        )
        ratio = w_alpha2_bound_gaussian(2.0, 0.25) / w_alpha2_bound_gaussian(1.0, 0.25)
        assert ratio == pytest.approx(2.0 ** (2.0 - 0.5), rel=1e-12)

    def test_monotone_in_alpha(self):
        alphas = np.arange(0.05, 0.5, 0.05)
        values = [w_alpha2_bound_gaussian(1.0, float(a)) for a in alphas]
        assert all(b >= a for a, b in zip(values, values[1:]))


class TestIdentityRisk:
    def test_p4_value(self):
        assert identity_risk_walphap(1.0, 0.25, 4.0) == pytest.approx(3.0, rel=1e-12)

    def test_p2_attains_bound(self):
        assert identity_risk_walphap(1.0, 0.25, 2.0) == pytest.approx(
            w_alpha2_bound_gaussian(1.0, 0.25), rel=1e-12
        )

    def test_p4_exceeds_bound(self):
        # the observation is not efficient away from p = 2
        risk = identity_risk_walphap(1.0, 0.25, 4.0)
        bound = w_alphap_bound_gaussian(1.0, 0.25, 4.0)
        assert risk > bound

    def test_infinite_above_half(self):
        assert identity_risk_walphap(1.0, 0.6, 2.0) == math.inf


class TestCoxBounds:
    def test_l2_unit_intensity(self):
        intensity = IntensitySpec(DriftSpec.constant_rate(1.0))
        assert l2_bound_cox(intensity, MeasureSpec.lebesgue(), 1.0) == pytest.approx(
            0.5, rel=1e-10
        )

    def test_l2_atom(self):
        intensity = IntensitySpec(DriftSpec.constant_rate(2.0))
        value = l2_bound_cox(intensity, MeasureSpec.discrete([(1.0, 1.0)]), 1.0)
        assert value == pytest.approx(2.0, rel=1e-12)

    def test_l2_zero_intensity(self):
        intensity = IntensitySpec(DriftSpec.zero())
        assert l2_bound_cox(intensity, MeasureSpec.lebesgue(), 1.0) == pytest.approx(
            0.0, abs=1e-12
        )

    def test_quadratic_fractional_matches_gaussian(self):
        intensity = IntensitySpec(DriftSpec.constant_rate(1.0))
        value = w_alpha2_bound_cox(intensity, 1.0, 0.25)
        assert value == pytest.approx(8.0 / 3.0, rel=1e-6)

    def test_linearity_in_mean_intensity(self):
        for c in (0.5, 2.0, 3.5):
            intensity = IntensitySpec(DriftSpec.constant_rate(c))
            value = w_alpha2_bound_cox(intensity, 1.0, 0.3)
            assert value == pytest.approx(
                c * w_alpha2_bound_gaussian(1.0, 0.3), rel=1e-6
            )

    def test_random_multiplier_scales_the_mean(self):
        intensity = IntensitySpec(
            DriftSpec.constant_rate(1.0), multiplier_shape=2.0, multiplier_scale=1.0
        )
        value = w_alpha2_bound_cox(intensity, 1.0, 0.25)
        assert value == pytest.approx(2.0 * 8.0 / 3.0, rel=1e-6)

    def test_infinite_above_half(self):
        intensity = IntensitySpec(DriftSpec.constant_rate(1.0))
        assert w_alpha2_bound_cox(intensity, 1.0, 0.5) == math.inf
        assert w_alpha2_bound_cox(IntensitySpec(DriftSpec.zero()), 1.0, 0.5) == 0.0
