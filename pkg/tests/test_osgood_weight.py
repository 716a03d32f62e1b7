"""Tests for osgood_carleman.osgood_weight."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from osgood_carleman.errors import ConfigurationError, DomainError, TableRangeError
from osgood_carleman.osgood_weight import (
    REGISTRY_NAMES,
    CarlemanWeight,
    UnitWeight,
    get_modulus,
    is_osgood,
    ode_residual,
    osgood_integral,
    reciprocal_integral,
)


def _linear_psi(tau, gamma=8.0, horizon=1.0, alpha=0.5):
    return np.exp(gamma * (horizon**alpha - (horizon - tau / gamma) ** alpha) / alpha)


class TestModulusRegistry:
    @pytest.mark.parametrize("name", REGISTRY_NAMES)
    def test_invariants_hold(self, name):
        report = get_modulus(name).check()
        assert report.passed, report.checks

    @pytest.mark.parametrize("name", ["quadratic", "holder:1.5", "holder:x", "holder:0"])
    def test_unknown_names(self, name):
        with pytest.raises(ConfigurationError):
            get_modulus(name)

    def test_holder_one_is_linear(self):
        assert get_modulus("holder:1").name == "linear"

    def test_log_modulus_endpoints(self):
        mu = get_modulus("log")
        assert float(mu(1.0)) == pytest.approx(1.0, abs=1e-14)
        assert float(mu(0.0)) == 0.0


class TestOsgood:
    @pytest.mark.parametrize("name,expected", [("linear", True), ("log", True), ("sqrt", False)])
    def test_divergence(self, name, expected):
        assert is_osgood(get_modulus(name)) is expected

    def test_linear_integral(self, linear_mu):
        assert osgood_integral(linear_mu, 1e-3) == pytest.approx(math.log(1000.0), rel=1e-12)

    def test_integral_at_one(self, linear_mu):
        assert osgood_integral(linear_mu, 1.0) == 0.0

    @pytest.mark.parametrize("lower", [0.0, -1.0, 2.0])
    def test_integral_domain(self, linear_mu, lower):
        with pytest.raises(DomainError):
            osgood_integral(linear_mu, lower)

    @settings(max_examples=25, deadline=None)
    @given(st.floats(min_value=1e-200, max_value=1.0))
    def test_table_matches_closed_form_sqrt(self, lower):
        mu = get_modulus("sqrt")
        expected = 2.0 * (1.0 - math.sqrt(lower))
        assert float(reciprocal_integral(mu, lower)) == pytest.approx(expected, rel=1e-10, abs=1e-14)

    def test_table_matches_quad_for_log(self):
        mu = get_modulus("log")
        assert float(reciprocal_integral(mu, 1e-6)) == pytest.approx(osgood_integral(mu, 1e-6), rel=1e-10)


class TestCarlemanWeight:
    @pytest.mark.parametrize("alpha", [0.0, 1.0, -0.5])
    def test_rejects_alpha(self, linear_mu, alpha):
        with pytest.raises(DomainError):
            CarlemanWeight(linear_mu, 8.0, 1.0, alpha)

    def test_rejects_nonpositive_gamma(self, linear_mu):
        with pytest.raises(DomainError):
            CarlemanWeight(linear_mu, 0.0)

    def test_linear_psi_closed_form(self, linear_weight):
        tau = np.linspace(0.0, 7.9, 50)
        np.testing.assert_allclose(linear_weight.psi(tau), _linear_psi(tau), rtol=1e-8)

    def test_psi_starts_at_one(self, linear_weight):
        assert float(linear_weight.psi(0.0)) == pytest.approx(1.0, abs=1e-12)

    def test_tau_outside_range(self, linear_weight):
        with pytest.raises(DomainError):
            linear_weight.psi(8.0)
        with pytest.raises(DomainError):
            linear_weight.psi(-0.1)

    def test_table_range_error_names_t_max(self, linear_mu):
        weight = CarlemanWeight(linear_mu, 8.0, 1.0, 0.5, t_max=10.0)
        with pytest.raises(TableRangeError) as err:
            weight.log_phi_inverse(5.0)
        assert "t_max" in str(err.value)

    def test_tau_limit_inside_range_for_small_table(self, linear_mu):
        weight = CarlemanWeight(linear_mu, 8.0, 1.0, 0.5, t_max=10.0)
        limit = weight.tau_limit
        assert 0.0 < limit < 8.0
        weight.psi(0.99 * limit)

    def test_phi_inverse_round_trip(self, linear_weight):
        t = np.array([1.0, 10.0, 1e5, 1e40])
        np.testing.assert_allclose(linear_weight.phi_inverse(linear_weight.phi(t)), t, rtol=1e-10)

    @pytest.mark.parametrize("name", REGISTRY_NAMES)
    def test_ode_residual(self, name):
        weight = CarlemanWeight(get_modulus(name), 8.0)
        assert float(ode_residual(weight, samples=200).max()) <= 1e-6

    def test_Phi_values_match_adaptive_quadrature(self, linear_weight):
        tau = np.array([0.5, 2.0, 6.0])
        vectorized = linear_weight.Phi_values(tau)
        adaptive = [linear_weight.Phi_gamma(x)[0] for x in tau]
        np.testing.assert_allclose(vectorized, adaptive, rtol=1e-9)

    def test_Phi_gamma_derivatives(self, linear_weight):
        value, first, second = linear_weight.Phi_gamma(3.0)
        assert first == pytest.approx(float(_linear_psi(3.0)), rel=1e-8)
        # psi' = (T - tau/gamma)^(alpha-1) psi for mu(s) = s
        assert second == pytest.approx((1.0 - 3.0 / 8.0) ** -0.5 * first, rel=1e-8)
        assert value > 3.0

    def test_Phi_second_positive(self):
        weight = CarlemanWeight(get_modulus("log"), 16.0)
        tau = np.linspace(0.0, 15.0, 40)
        assert np.all(weight.psi_prime(tau) > 0.0)

    def test_time_profile(self, linear_weight):
        t = np.array([0.25, 0.5, 1.0])
        profile = linear_weight.time_profile(t)
        np.testing.assert_allclose(profile.exponent_dt, -profile.phi_prime)
        assert profile.exponent[-1] == 0.0
        assert np.all(np.diff(profile.exponent) < 0.0)


class TestUnitWeight:
    def test_all_zero(self):
        profile = UnitWeight().time_profile(np.linspace(0.1, 1.0, 5))
        for column in profile:
            np.testing.assert_array_equal(column, 0.0)
