"""Tests for osgood_carleman.carleman_harness."""
import math

import numpy as np
import pytest

import osgood_carleman.carleman_harness as harness
from osgood_carleman.carleman_harness import (
    ADAPTED,
    FINAL3,
    H0,
    PENALTY,
    PLAIN,
    adapted_test_function,
    apply_weighted_operator,
    build_ensemble,
    carleman_sides,
    conjugate,
    fit_constants,
    make_member,
    per_block_energy,
    per_block_lower_bounds,
    plain_test_function,
    time_grid,
    weighted_operator_log,
)
from osgood_carleman.coefficients import identity_coefficient, synthetic_coefficient
from osgood_carleman.errors import ConfigurationError, DomainError, SupportError
from osgood_carleman.helpers import make_rng
from osgood_carleman.osgood_weight import CarlemanWeight, UnitWeight
from osgood_carleman.spectral_core import SpectralField


@pytest.fixture
def wave(grid64):
    return SpectralField.from_function(grid64, lambda x: np.sin(2 * x))


@pytest.fixture
def identity():
    return identity_coefficient()


class TestTimeGrid:
    def test_uniform_node_count(self):
        nodes = time_grid((0.125, 0.375), 256)
        assert nodes.size == 257
        assert nodes[0] == 0.125 and nodes[-1] == 0.375

    def test_odd_cells_rounded_up(self):
        assert time_grid((0.0, 1.0), 5).size == 7

    def test_graded_grid(self):
        nodes = time_grid((0.125, 0.375), 64, graded=True)
        steps = np.diff(nodes)
        assert nodes.size == 65
        assert nodes[-1] == 0.375
        assert steps[0] == pytest.approx(1e-4)
        assert np.all(steps > 0.0)
        assert np.all(np.diff(steps) >= -1e-15)

    def test_graded_grid_too_short(self):
        with pytest.raises(ConfigurationError):
            time_grid((0.0, 100.0), 4, graded=True, ratio=1.01)


class TestTestFunctions:
    def test_support_certificate(self, wave):
        assert plain_test_function(wave).support_certificate() == 0.0

    def test_window_past_half_horizon(self, wave):
        u = plain_test_function(wave, window=(0.4, 0.6))
        with pytest.raises(SupportError):
            u.support_certificate()

    def test_empty_window(self, wave):
        with pytest.raises(ConfigurationError):
            plain_test_function(wave, window=(0.3, 0.3))

    def test_envelope_peak(self, wave):
        sigma, dsigma = plain_test_function(wave).envelope(0.25)
        assert float(sigma) == pytest.approx(1.0)
        assert float(dsigma) == pytest.approx(0.0, abs=1e-15)

    def test_space_time_derivative(self, wave):
        u = plain_test_function(wave)
        times = np.linspace(0.13, 0.37, 2001)
        field = u.space_time(times)
        numeric = np.gradient(field.values, times, axis=0, edge_order=2)
        gap = np.max(np.abs(field.time_derivative[5:-5] - numeric[5:-5]))
        assert gap <= 1e-4 * np.max(np.abs(numeric))

    def test_unknown_family(self, wave, linear_weight):
        with pytest.raises(ConfigurationError):
            make_member(wave, "curved", linear_weight)

    def test_horizon_mismatch(self, wave, linear_mu):
        weight = CarlemanWeight(linear_mu, 8.0, horizon=0.5)
        with pytest.raises(ConfigurationError):
            conjugate(plain_test_function(wave), weight)


class TestConjugation:
    def test_double_conjugation_is_identity(self, wave, linear_weight):
        u = plain_test_function(wave)
        back = conjugate(conjugate(u, linear_weight), linear_weight, sign=-1)
        ell, dell = back.amplitude(np.linspace(0.13, 0.37, 11))
        np.testing.assert_allclose(ell, 0.0, atol=1e-9)
        np.testing.assert_allclose(dell, 0.0, atol=1e-7)

    def test_adapted_conjugate_is_bare_product(self, wave, linear_weight):
        u = adapted_test_function(wave, linear_weight)
        assert u.family == ADAPTED
        ell, _ = conjugate(u, linear_weight).amplitude(np.linspace(0.13, 0.37, 11))
        np.testing.assert_allclose(ell, 0.0, atol=1e-9)

    def test_exponent_is_Phi_over_gamma(self, wave, linear_weight):
        v = conjugate(plain_test_function(wave), linear_weight)
        ell, dell = v.amplitude(np.array([0.25]))
        tau = 8.0 * 0.75
        assert ell[0] == pytest.approx(linear_weight.Phi_gamma(tau)[0] / 8.0, rel=1e-9)
        assert dell[0] == pytest.approx(-float(linear_weight.psi(tau)), rel=1e-9)

    def test_weight_range(self, wave, linear_weight):
        v = conjugate(plain_test_function(wave), linear_weight)
        with pytest.raises(DomainError):
            v.amplitude(np.array([0.6]))


class TestWeightedOperator:
    def test_identity_weight_closed_form(self, wave, identity, grid64):
        u = plain_test_function(wave)
        result = apply_weighted_operator(u, identity, UnitWeight(), 0.25)
        np.testing.assert_allclose(result.physical_values.real, -4.0 * np.sin(2 * grid64.axis_coordinates), atol=1e-12)

    def test_with_carleman_weight(self, wave, identity, linear_weight, grid64):
        u = plain_test_function(wave)
        t = 0.2
        sigma, dsigma = u.envelope(t)
        phi_prime = float(linear_weight.time_profile(np.array([t])).phi_prime[0])
        expected = (float(dsigma) + (phi_prime - 4.0) * float(sigma)) * np.sin(2 * grid64.axis_coordinates)
        result = apply_weighted_operator(u, identity, linear_weight, t)
        np.testing.assert_allclose(result.physical_values.real, expected, atol=1e-9 * np.abs(expected).max())

    def test_endpoint_excluded(self, wave, identity, linear_weight):
        with pytest.raises(DomainError) as err:
            apply_weighted_operator(plain_test_function(wave), identity, linear_weight, 0.0)
        assert err.value.reason == "excluded_endpoint"

    def test_beyond_half_horizon(self, wave, identity, linear_weight):
        with pytest.raises(DomainError):
            apply_weighted_operator(plain_test_function(wave), identity, linear_weight, 0.75)

    def test_batch_matches_single_times(self, wave, identity, linear_weight):
        v = conjugate(plain_test_function(wave), linear_weight)
        times = np.array([0.15, 0.25, 0.35])
        ell, mantissa = weighted_operator_log(v, identity, linear_weight, times)
        assert mantissa.shape == (3, 64)
        for i, t in enumerate(times):
            single = apply_weighted_operator(v, identity, linear_weight, t).physical_values
            np.testing.assert_allclose(np.exp(ell[i]) * mantissa[i], single, rtol=1e-12, atol=1e-12 * np.abs(single).max())


class TestBlockEnergy:
    @pytest.mark.parametrize("gamma", [8.0, 16.0, 32.0])
    def test_expansion_identity(self, grid64, rng, identity, linear_mu, gamma):
        weight = CarlemanWeight(linear_mu, gamma)
        shape = build_ensemble(grid64, rng, 6)[5]
        v = conjugate(adapted_test_function(shape, weight), weight)
        for h in range(4):
            assert per_block_energy(v, identity, weight, h, cells=256).identity_error <= 1e-8

    def test_cross_term_vanishes_for_constant_coefficient(self, grid64, rng, identity, linear_weight):
        shape = build_ensemble(grid64, rng, 3)[2]
        v = conjugate(adapted_test_function(shape, linear_weight), linear_weight)
        energy = per_block_energy(v, identity, linear_weight, 2, cells=128)
        assert abs(energy.cross_term) <= 1e-10 * energy.lhs
        assert energy.log_scale == pytest.approx(0.0, abs=1e-9)

    def test_synthetic_coefficient_expansion(self, grid64, rng, linear_mu):
        weight = CarlemanWeight(linear_mu, 8.0)
        a = synthetic_coefficient(0.5, linear_mu, 0.2)
        shape = build_ensemble(grid64, rng, 3)[1]
        v = conjugate(adapted_test_function(shape, weight), weight)
        assert per_block_energy(v, a, weight, 1, cells=256).identity_error <= 1e-8

    def test_lower_bound_rows(self, grid64, rng, identity, linear_weight):
        shape = build_ensemble(grid64, rng, 1)[0]
        v = conjugate(adapted_test_function(shape, linear_weight), linear_weight)
        rows = per_block_lower_bounds(v, identity, linear_weight, 0, cells=64)
        tags = [row.case_tag for row in rows]
        assert tags == [H0, FINAL3, PENALTY]
        assert rows[0].passed


class TestEnsemble:
    def test_single_block_members_first(self, grid64, rng):
        shapes = build_ensemble(grid64, rng, 12, max_block=6)
        assert len(shapes) == 12
        for shape in shapes[:5]:
            assert shape.norm() == pytest.approx(1.0, rel=1e-12)
        assert all(shape.is_real() for shape in shapes)


class TestCarlemanSides:
    @pytest.mark.parametrize("family", [PLAIN, ADAPTED])
    def test_form_agreement(self, grid64, rng, identity, linear_weight, family):
        shape = build_ensemble(grid64, rng, 8)[7]
        u = make_member(shape, family, linear_weight)
        report = carleman_sides(u, identity, linear_weight, cells=128, per_block=False)
        assert report.form_agreement <= 1e-8
        assert report.ratio > 0.0

    def test_form_agreement_sees_the_operator(self, wave, identity, linear_weight, monkeypatch):
        u = adapted_test_function(wave, linear_weight)
        exact = harness.weighted_operator_log

        def skewed(*args):
            ell, mantissa = exact(*args)
            return ell, 1.01 * mantissa

        monkeypatch.setattr(harness, "weighted_operator_log", skewed)
        report = carleman_sides(u, identity, linear_weight, cells=64, per_block=False)
        assert report.form_agreement == pytest.approx(1.0 - 1.0 / 1.01**2, rel=1e-5)

    def test_homogeneous_of_degree_two(self, wave, identity, linear_weight):
        u = adapted_test_function(wave, linear_weight)
        single = carleman_sides(u, identity, linear_weight, cells=64, per_block=False)
        double = carleman_sides(u.scaled(2.0), identity, linear_weight, cells=64, per_block=False)
        assert double.lhs == pytest.approx(4.0 * single.lhs, rel=1e-12)
        assert double.ratio == pytest.approx(single.ratio, rel=1e-12)

    def test_zero_function(self, grid64, identity, linear_weight):
        u = adapted_test_function(SpectralField.zeros(grid64), linear_weight)
        report = carleman_sides(u, identity, linear_weight, cells=64)
        assert report.lhs == 0.0
        assert report.ratio == 0.0
        assert report.per_block_table == []

    def test_per_block_table(self, wave, identity, linear_weight):
        report = carleman_sides(adapted_test_function(wave, linear_weight), identity, linear_weight, cells=64, levels=3)
        assert [row.h for row in report.block_energies] == [0, 1, 2, 3]
        assert "per_block_table" in report.as_dict()

    def test_log_sides_finite_for_large_gamma(self, wave, identity, linear_mu):
        weight = CarlemanWeight(linear_mu, 64.0)
        report = carleman_sides(adapted_test_function(wave, weight), identity, weight, cells=64, per_block=False)
        assert math.isfinite(report.log_lhs)
        assert math.isfinite(report.ratio)


class TestFitConstants:
    @pytest.mark.parametrize("gammas,reason", [([8, 16], "few_gammas"), ([8, 16, 40], "not_geometric"), ([], "empty_gammas")])
    def test_gamma_list(self, wave, identity, linear_mu, gammas, reason):
        with pytest.raises(ConfigurationError) as err:
            fit_constants([wave] * 10, gammas, identity, linear_mu)
        assert err.value.reason == reason

    def test_small_ensemble(self, wave, identity, linear_mu):
        with pytest.raises(ConfigurationError):
            fit_constants([wave] * 3, [8, 16, 32], identity, linear_mu)

    @pytest.mark.slow
    def test_identity_constants(self, grid64, identity, linear_mu):
        shapes = build_ensemble(grid64, make_rng(7, "carleman"), 10, max_block=4)
        fitted = fit_constants(shapes, [8.0, 16.0, 32.0], identity, linear_mu, cells=64)
        assert fitted.C_hat > 0.0
        assert fitted.gamma0_hat in (8.0, 16.0, 32.0)
        assert set(fitted.ratio_table) == {8.0, 16.0, 32.0}
