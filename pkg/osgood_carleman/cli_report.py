"""Command-line front end: ``osgood-carleman <suite> [flags]``.

Exit status: 0 when every check passed, 1 when a check failed or a suite
raised, 2 for an invalid configuration.
"""
from __future__ import annotations

import argparse
import logging
import sys
from typing import Any, Sequence

from . import __version__
from .config import SuiteConfig, build_config
from .const import (
    CONF_ALPHA,
    CONF_CARLEMAN_ENSEMBLE,
    CONF_CARLEMAN_GRID_POINTS,
    CONF_COEFFS,
    CONF_DELTA,
    CONF_DEPTH,
    CONF_EMIT_GRID,
    CONF_ENSEMBLE,
    CONF_FAMILY,
    CONF_FIELD,
    CONF_FINAL3_FLOOR,
    CONF_GAMMA,
    CONF_GAMMAS,
    CONF_GRID_POINTS,
    CONF_HORIZON,
    CONF_INTERVALS,
    CONF_J0,
    CONF_L_SIGN,
    CONF_LAMBDA0,
    CONF_M,
    CONF_MAX_BLOCK,
    CONF_MU,
    CONF_PLOT_DATA,
    CONF_REPORT,
    CONF_RESIDUAL_SAMPLES,
    CONF_SEED,
    CONF_SOBOLEV_S,
    CONF_SYMBOL,
    CONF_T_MAX,
    CONF_TIME_CELLS,
    CONF_VERIFY,
    SUITE_ALL,
    SUITES,
)
from .errors import ConfigurationError, VerificationError
from .report import Check, VerificationReport, emit_plot_data, provenance, write_report
from .suites import SUITE_RUNNERS

_LOGGER = logging.getLogger(__name__)

EXIT_PASSED = 0
EXIT_FAILED = 1
EXIT_USAGE = 2


def run_suite(config: SuiteConfig) -> VerificationReport:
    """Run one suite, or every suite for ``all``, and write the requested outputs."""
    params = config.parameters
    if config.suite == SUITE_ALL:
        report = VerificationReport(SUITE_ALL, provenance=provenance(params[CONF_SEED]))
        report.data["suites"] = {}
        for name in SUITES:
            sub = _run_one(name, params)
            report.data["suites"][name] = sub.as_dict()
            report.extend(Check(f"{name}.{c.name}", c.kind, c.value, c.threshold, c.status) for c in sub.checks)
    else:
        report = _run_one(config.suite, params)
    if config.output_path:
        write_report(report, config.output_path)
    if params[CONF_PLOT_DATA]:
        emit_plot_data(report, params[CONF_PLOT_DATA])
    return report


def _run_one(name: str, params: dict[str, Any]) -> VerificationReport:
    _LOGGER.info("suite %s: start", name)
    try:
        report = SUITE_RUNNERS[name](params)
    except ConfigurationError:
        raise
    except VerificationError as err:
        _LOGGER.error("suite %s aborted: %s (%s)", name, err, err.reason)
        report = VerificationReport(name, provenance=provenance(params[CONF_SEED]))
        report.add(Check.flag(f"aborted:{err.reason}", "identity", False))
        report.data["error"] = {"message": str(err), "reason": err.reason}
    _status_line(report)
    return report


def _status_line(report: VerificationReport) -> None:
    total = len(report.checks)
    passed = total - len(report.failed())
    glyph = "✅" if report.passed else "❌"
    print(f"{glyph} {report.suite}: {passed}/{total} checks passed")
    for check in report.failed():
        print(f"   ⛔ {check.name}: value={check.value:.6g} threshold={check.threshold:.6g}")


# ---- argument parsing


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with suite parameters (flags win)")
    common.add_argument("--seed", type=int, dest=CONF_SEED)
    common.add_argument("--report", dest=CONF_REPORT, help="Write the JSON report here")
    common.add_argument("--plot-data", dest=CONF_PLOT_DATA, help="Write CSV plot data here")
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true")
    verbosity.add_argument("-q", "--quiet", action="store_true")
    return common


def _add_weight_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mu", dest=CONF_MU, help="linear | log | sqrt | holder:<a>")
    p.add_argument("--alpha", type=float, dest=CONF_ALPHA)
    p.add_argument("--T", type=float, dest=CONF_HORIZON)
    p.add_argument("--t-max", type=float, dest=CONF_T_MAX)


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(prog="osgood-carleman", description="Osgood-weight Carleman verification suites")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="suite", required=True)

    weight = sub.add_parser("weight", parents=[common], help="Weight ODE and modulus registry")
    _add_weight_flags(weight)
    weight.add_argument("--gamma", type=float, dest=CONF_GAMMA)

    lp = sub.add_parser("lp", parents=[common], help="Littlewood-Paley blocks")
    lp.add_argument("--field", dest=CONF_FIELD)
    lp.add_argument("--s", type=float, dest=CONF_SOBOLEV_S)
    lp.add_argument("--grid-points", type=int, dest=CONF_GRID_POINTS)
    lp.add_argument("--ensemble", type=int, dest=CONF_ENSEMBLE)

    pp = sub.add_parser("paraproduct", parents=[common], help="Modified paraproduct estimates")
    pp.add_argument("--symbol", dest=CONF_SYMBOL)
    pp.add_argument("--m", dest=CONF_M, help="'auto' or an integer >= 1")
    pp.add_argument("--lambda0", type=float, dest=CONF_LAMBDA0)
    pp.add_argument("--grid-points", type=int, dest=CONF_GRID_POINTS)
    pp.add_argument("--ensemble", type=int, dest=CONF_ENSEMBLE)

    coeffs = sub.add_parser("coeffs", parents=[common], help="Coefficient families and mollification")
    coeffs.add_argument("--family", dest=CONF_FAMILY)
    coeffs.add_argument("--coeffs", dest=CONF_COEFFS, help="JSON family spec")
    coeffs.add_argument("--mu", dest=CONF_MU)
    coeffs.add_argument("--alpha", type=float, dest=CONF_ALPHA)
    coeffs.add_argument("--T", type=float, dest=CONF_HORIZON)
    coeffs.add_argument("--delta", type=float, dest=CONF_DELTA)
    coeffs.add_argument("--depth", type=int, dest=CONF_DEPTH)
    coeffs.add_argument("--verify", nargs="?", const="all", dest=CONF_VERIFY, help="all | none")

    carleman = sub.add_parser("carleman", parents=[common], help="Carleman estimate sides and fitted constants")
    _add_weight_flags(carleman)
    carleman.add_argument("--coeffs", dest=CONF_COEFFS)
    carleman.add_argument("--gammas", dest=CONF_GAMMAS, help="comma separated, geometric")
    carleman.add_argument("--ensemble", type=int, dest=CONF_CARLEMAN_ENSEMBLE)
    carleman.add_argument("--grid-points", type=int, dest=CONF_CARLEMAN_GRID_POINTS)
    carleman.add_argument("--time-cells", type=int, dest=CONF_TIME_CELLS)
    carleman.add_argument("--max-block", type=int, dest=CONF_MAX_BLOCK)
    carleman.add_argument("--final3-floor", type=float, dest=CONF_FINAL3_FLOOR)
    carleman.add_argument("--m", dest=CONF_M)

    cx = sub.add_parser("counterexample", parents=[common], help="Non-uniqueness counterexample")
    cx.add_argument("--N", type=int, dest=CONF_INTERVALS)
    cx.add_argument("--j0", dest=CONF_J0, help="'auto' or an integer >= 2")
    cx.add_argument("--verify", nargs="?", const="all", dest=CONF_VERIFY)
    cx.add_argument("--emit-grid", dest=CONF_EMIT_GRID, help="CSV of u, l, b1, b2, c on a grid")
    cx.add_argument("--residual-samples", type=int, dest=CONF_RESIDUAL_SAMPLES)
    cx.add_argument("--l-sign", type=int, choices=(-1, 1), dest=CONF_L_SIGN)

    sub.add_parser(SUITE_ALL, parents=[common], help="Every suite, one combined report")
    return parser


def _configure_logging(args: argparse.Namespace) -> None:
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args)
    reserved = {"suite", "config", "verbose", "quiet"}
    overrides = {key: value for key, value in vars(args).items() if key not in reserved}
    try:
        config = build_config(args.suite, overrides, args.config)
    except ConfigurationError as err:
        print(f"❌ {err}", file=sys.stderr)
        return EXIT_USAGE
    try:
        report = run_suite(config)
    except ConfigurationError as err:
        print(f"❌ {err}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as err:
        _LOGGER.error("cannot write output: %s", err)
        return EXIT_FAILED
    return EXIT_PASSED if report.passed else EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
