"""Tests for osgood_carleman.helpers."""
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from osgood_carleman.errors import ConfigurationError, FitFailure
from osgood_carleman.helpers import (
    bump,
    drift,
    fit_power_law,
    log_simpson,
    make_rng,
    relative_error,
    simpson_weights,
)


class TestErrors:
    def test_relative_error_scaled_by_reference(self):
        assert relative_error([1.1, 2.0], [1.0, 2.0]) == pytest.approx(0.05)

    def test_relative_error_zero_reference_is_absolute(self):
        assert relative_error([0.5], [0.0]) == 0.5

    def test_drift_identical(self):
        assert drift(3.0, 3.0) == 0.0

    def test_drift_from_zero_is_infinite(self):
        assert drift(0.0, 1.0) == float("inf")

    def test_drift_relative(self):
        assert drift(2.0, 2.1) == pytest.approx(0.05)


class TestFitPowerLaw:
    def test_recovers_exponent_and_constant(self):
        x = np.array([1.0, 2.0, 4.0, 8.0])
        slope, c = fit_power_law(x, 3.0 * x**-1.5)
        assert slope == pytest.approx(-1.5)
        assert c == pytest.approx(3.0)

    def test_rejects_nonpositive(self):
        with pytest.raises(FitFailure):
            fit_power_law([1.0, 2.0], [1.0, 0.0])

    def test_rejects_single_point(self):
        with pytest.raises(FitFailure):
            fit_power_law([1.0], [1.0])


class TestMakeRng:
    def test_same_stream_reproducible(self):
        assert make_rng(7, "lp").random() == make_rng(7, "lp").random()

    def test_streams_differ(self):
        assert make_rng(7, "lp").random() != make_rng(7, "carleman").random()


class TestSimpson:
    def test_uniform_weights_integrate_cubic_exactly(self):
        x = np.linspace(0.0, 2.0, 11)
        assert simpson_weights(x) @ x**3 == pytest.approx(4.0, rel=1e-13)

    def test_even_node_count_rejected(self):
        with pytest.raises(ConfigurationError):
            simpson_weights(np.linspace(0.0, 1.0, 4))

    def test_graded_grid_integrates_quadratic(self):
        x = np.linspace(0.0, 1.0, 9) ** 2
        assert simpson_weights(x) @ x**2 == pytest.approx(1.0 / 3.0, rel=1e-3)

    def test_log_simpson_matches_plain(self):
        x = np.linspace(0.0, 1.0, 21)
        values = np.exp(x)
        assert log_simpson(x, x) == pytest.approx(np.log(simpson_weights(x) @ values), rel=1e-13)

    def test_log_simpson_all_zero(self):
        x = np.linspace(0.0, 1.0, 5)
        assert log_simpson(np.full(5, -np.inf), x) == float("-inf")

    def test_log_simpson_survives_huge_exponents(self):
        x = np.linspace(0.0, 1.0, 5)
        assert log_simpson(np.full(5, 2000.0), x) == pytest.approx(2000.0, rel=1e-14)


class TestBump:
    def test_peak_value(self):
        assert bump(0.0) == pytest.approx(np.exp(-1.0))

    @given(st.floats(min_value=1.0, max_value=50.0))
    def test_vanishes_outside(self, s):
        assert bump(s) == 0.0
        assert bump(-s, order=2) == 0.0

    def test_first_derivative_matches_difference(self):
        s = np.linspace(-0.9, 0.9, 7)
        h = 1e-6
        numeric = (bump(s + h) - bump(s - h)) / (2 * h)
        np.testing.assert_allclose(bump(s, order=1), numeric, atol=1e-8)

    def test_second_derivative_matches_difference(self):
        s = np.linspace(-0.8, 0.8, 7)
        h = 1e-5
        numeric = (bump(s + h, order=1) - bump(s - h, order=1)) / (2 * h)
        np.testing.assert_allclose(bump(s, order=2), numeric, atol=1e-7)

    def test_unsupported_order(self):
        with pytest.raises(ConfigurationError):
            bump(0.0, order=3)
