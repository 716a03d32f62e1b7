"""Tests for the suite runners in osgood_carleman.suites."""
import pytest

from osgood_carleman import suites
from osgood_carleman.config import build_config
from osgood_carleman.const import (
    CONF_CARLEMAN_ENSEMBLE,
    CONF_CARLEMAN_GRID_POINTS,
    CONF_CHOOSE_M_ENSEMBLE,
    CONF_ENSEMBLE,
    CONF_FAMILY,
    CONF_GAMMAS,
    CONF_GRID_POINTS,
    CONF_INTERVALS,
    CONF_J0,
    CONF_M,
    CONF_MAX_BLOCK,
    CONF_RESIDUAL_SAMPLES,
    CONF_SYMBOL,
    CONF_TIME_CELLS,
    CONF_VERIFY,
)
from osgood_carleman.coefficients import identity_coefficient
from osgood_carleman.paraproduct import MChoice
from osgood_carleman.report import KINDS
from osgood_carleman.suites import (
    EXPECTED_OSGOOD,
    M_SAMPLE_TIMES,
    SUITE_RUNNERS,
    _carleman_m,
    default_symbol,
    run_coeffs,
    run_lp,
    run_weight,
)
from osgood_carleman.spectral_core import TorusGrid, dump_field


def _params(suite, **overrides):
    return build_config(suite, overrides).parameters


def _by_name(report):
    return {check.name: check for check in report.checks}


class TestRegistry:
    def test_every_suite_has_a_runner(self):
        assert set(SUITE_RUNNERS) == {"weight", "lp", "paraproduct", "coeffs", "carleman", "counterexample"}

    def test_expected_classification(self):
        assert EXPECTED_OSGOOD == {"linear": True, "log": True, "sqrt": False, "holder:0.5": False}

    def test_default_symbol_minimum(self):
        grid = TorusGrid(1, 256)
        assert default_symbol(grid).physical_values.min() >= 0.65 - 1e-12


class TestWeightSuite:
    def test_default_passes(self):
        report = run_weight(_params("weight"))
        assert report.passed, [c.name for c in report.failed()]
        names = _by_name(report)
        assert {"is_osgood_registry", "ode_residual", "closed_form_psi", "Phi_refinement"} <= set(names)
        assert all(check.kind in KINDS for check in report.checks)

    def test_plot_table(self):
        header, rows = run_weight(_params("weight")).plot_table
        assert tuple(header) == ("tau", "log_psi", "Phi", "Phi_second")
        assert len(rows) == 101
        assert rows[0]["Phi"] == pytest.approx(0.0, abs=1e-14)


class TestLpSuite:
    def test_identities_on_small_grid(self):
        report = run_lp(_params("lp", **{CONF_GRID_POINTS: 64, CONF_ENSEMBLE: 3}))
        checks = _by_name(report)
        for name in ("telescoping_partition", "almost_orthogonality", "bernstein_ratio"):
            assert checks[name].status, name
        header, rows = report.plot_table
        assert tuple(header) == ("j", "norm", "weighted_norm")
        assert [row["j"] for row in rows] == list(range(len(rows)))


class TestCoeffsSuite:
    def test_regularity_only(self):
        report = run_coeffs(_params("coeffs", **{CONF_VERIFY: "none"}))
        assert [c.name for c in report.checks] == ["coefficient_regularity"]
        assert report.passed
        assert report.data["coefficient"]["lambda0"] > 0.0

    def test_identity_family(self):
        report = run_coeffs(_params("coeffs", **{CONF_VERIFY: "none", CONF_FAMILY: "identity"}))
        assert report.passed
        assert report.data["coefficient"]["name"].startswith("identity")


class TestCarlemanM:
    def test_largest_choice_over_times(self, monkeypatch):
        calls = []

        def record(matrix, lambda0, rng, ensemble):
            calls.append(matrix)
            return MChoice(3 if len(calls) == 5 else 1, 0.0, 0.0, {})

        monkeypatch.setattr(suites, "choose_m", record)
        assert _carleman_m(_params("carleman"), identity_coefficient(), TorusGrid(2, 16)) == 3
        assert len(calls) == M_SAMPLE_TIMES
        assert all([len(row) for row in matrix] == [2, 2] for matrix in calls)

    def test_identity_needs_m_one(self):
        params = _params("carleman", **{CONF_CHOOSE_M_ENSEMBLE: 10})
        assert _carleman_m(params, identity_coefficient(), TorusGrid(1, 64)) == 1

    def test_explicit_m(self):
        assert _carleman_m(_params("carleman", **{CONF_M: 5}), identity_coefficient(), TorusGrid(1, 64)) == 5


@pytest.mark.slow
class TestHeavySuites:
    def test_paraproduct_identities(self):
        params = _params("paraproduct", **{CONF_GRID_POINTS: 64, CONF_ENSEMBLE: 5, CONF_CHOOSE_M_ENSEMBLE: 10, CONF_M: 4})
        checks = _by_name(SUITE_RUNNERS["paraproduct"](params))
        assert checks["constant_symbol_identity"].status
        assert checks["adjoint_pairing"].status

    def test_paraproduct_drifts_for_loaded_symbol(self, tmp_path):
        path = tmp_path / "symbol.json"
        dump_field(default_symbol(TorusGrid(1, 64)), path)
        params = _params(
            "paraproduct",
            **{CONF_SYMBOL: str(path), CONF_ENSEMBLE: 5, CONF_CHOOSE_M_ENSEMBLE: 10, CONF_M: 4},
        )
        report = SUITE_RUNNERS["paraproduct"](params)
        names = set(_by_name(report))
        for constant in report.data["constants"]:
            assert {f"{constant}_finite", f"{constant}_grid_drift", f"{constant}_reseed_drift"} <= names
        assert report.data["constant_level"] == 0.9

    def test_counterexample_without_conditions(self):
        params = _params(
            "counterexample", **{CONF_INTERVALS: 1000, CONF_J0: 1441, CONF_VERIFY: "none", CONF_RESIDUAL_SAMPLES: 200}
        )
        report = SUITE_RUNNERS["counterexample"](params)
        checks = _by_name(report)
        for name in ("residual_native", "residual_forward", "junction_mismatch", "lower_order_finite"):
            assert checks[name].status, name
        assert report.data["j0"] == 1441

    def test_carleman_identities(self):
        params = _params(
            "carleman",
            **{
                CONF_CARLEMAN_GRID_POINTS: 64,
                CONF_CARLEMAN_ENSEMBLE: 10,
                CONF_TIME_CELLS: 256,
                CONF_GAMMAS: "8,16,32",
                CONF_MAX_BLOCK: 3,
                CONF_M: 4,
            },
        )
        report = SUITE_RUNNERS["carleman"](params)
        checks = _by_name(report)
        assert checks["identity.form_agreement"].status
        header, rows = report.plot_table
        assert {row["gamma"] for row in rows} == {8.0, 16.0, 32.0, 64.0}
