"""Tests for the osgood-carleman command line."""
import csv
import json

import pytest

from osgood_carleman import cli_report
from osgood_carleman.cli_report import EXIT_FAILED, EXIT_PASSED, EXIT_USAGE, build_parser, main, run_suite
from osgood_carleman.config import build_config
from osgood_carleman.errors import SearchFailure
from osgood_carleman.report import CHECK_COLUMNS, Check, VerificationReport


class TestParser:
    @pytest.mark.parametrize("suite", ["weight", "lp", "paraproduct", "coeffs", "carleman", "counterexample", "all"])
    def test_subcommands(self, suite):
        args = build_parser().parse_args([suite, "--seed", "3"])
        assert args.suite == suite
        assert args.seed == 3

    def test_flags_map_to_config_keys(self):
        args = build_parser().parse_args(["carleman", "--gammas", "8,16", "--T", "0.5", "--time-cells", "64"])
        assert (args.gammas, args.horizon, args.time_cells) == ("8,16", 0.5, 64)

    def test_verify_without_value(self):
        assert build_parser().parse_args(["coeffs", "--verify"]).verify == "all"

    def test_missing_suite(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args([])

    def test_quiet_and_verbose_exclusive(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["weight", "-q", "-v"])


class TestMain:
    def test_bad_config_key(self, tmp_path, capsys):
        path = tmp_path / "suite.json"
        path.write_text(json.dumps({"bogus": 1}))
        assert main(["weight", "--config", str(path), "-q"]) == EXIT_USAGE
        assert "bogus" in capsys.readouterr().err

    def test_bad_flag_value(self):
        assert main(["lp", "--grid-points", "100", "-q"]) == EXIT_USAGE

    def test_weight_suite(self, tmp_path, capsys):
        report_path = tmp_path / "weight.json"
        plot_path = tmp_path / "weight.csv"
        code = main(["weight", "--report", str(report_path), "--plot-data", str(plot_path), "-q"])
        assert code == EXIT_PASSED
        assert "✅ weight" in capsys.readouterr().out
        payload = json.loads(report_path.read_text())
        assert payload["passed"] is True
        assert payload["provenance"]["seed"] == 7
        with plot_path.open() as handle:
            assert next(csv.reader(handle)) == ["tau", "log_psi", "Phi", "Phi_second"]

    def test_report_is_reproducible(self, tmp_path):
        first, second = tmp_path / "a.json", tmp_path / "b.json"
        main(["weight", "--report", str(first), "-q"])
        main(["weight", "--report", str(second), "-q"])
        assert first.read_text() == second.read_text()


class TestRunSuite:
    def test_aborted_suite_becomes_failed_check(self, monkeypatch, capsys):
        def explode(params):
            raise SearchFailure("no m found", "no_admissible_m")

        monkeypatch.setitem(cli_report.SUITE_RUNNERS, "weight", explode)
        report = run_suite(build_config("weight"))
        assert not report.passed
        assert [c.name for c in report.checks] == ["aborted:no_admissible_m"]
        assert report.data["error"]["reason"] == "no_admissible_m"
        assert "❌ weight" in capsys.readouterr().out

    def test_aborted_suite_exit_code(self, monkeypatch):
        def explode(params):
            raise SearchFailure("no m found", "no_admissible_m")

        monkeypatch.setitem(cli_report.SUITE_RUNNERS, "coeffs", explode)
        assert main(["coeffs", "-q"]) == EXIT_FAILED

    def test_all_prefixes_checks(self, monkeypatch, tmp_path):
        def trivial(name):
            def run(params):
                report = VerificationReport(name)
                report.add(Check.flag("ok", "identity", True))
                return report

            return run

        for name in list(cli_report.SUITE_RUNNERS):
            monkeypatch.setitem(cli_report.SUITE_RUNNERS, name, trivial(name))
        plot = tmp_path / "all.csv"
        report = run_suite(build_config("all", {"plot_data": str(plot)}))
        assert report.passed
        assert {c.name for c in report.checks} == {f"{n}.ok" for n in cli_report.SUITE_RUNNERS}
        assert set(report.data["suites"]) == set(cli_report.SUITE_RUNNERS)
        with plot.open() as handle:
            assert next(csv.reader(handle)) == list(CHECK_COLUMNS)
