"""One verification entry point per suite.

Each runner takes the validated parameter map and returns a
VerificationReport; none of them raise for a failed check, only for
invalid input.
"""
from __future__ import annotations

import logging
import math
from typing import Any, Callable

import numpy as np
from scipy.integrate import simpson

from .carleman_harness import ADAPTED, FINAL3, build_ensemble, fit_constants
from .coefficients import (
    CoefficientField,
    identity_coefficient,
    load_coefficient,
    mollifier_drift,
    mollify,
    synthetic_coefficient,
)
from .const import (
    CONF_ALPHA,
    CONF_CARLEMAN_DELTA,
    CONF_CARLEMAN_ENSEMBLE,
    CONF_CARLEMAN_GRID_POINTS,
    CONF_CHOOSE_M_ENSEMBLE,
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
    CONF_PERIOD,
    CONF_RESIDUAL_SAMPLES,
    CONF_SEED,
    CONF_SOBOLEV_S,
    CONF_SYMBOL,
    CONF_T_MAX,
    CONF_TIME_CELLS,
    CONF_VERIFY,
    CONSTANT_FIT_LEVEL,
)
from .counterexample import (
    CounterexampleData,
    build_counterexample,
    choose_j0,
    decay_certificate,
    eval_grid,
    flip_time,
    junction_profile,
    lower_order_sweep,
    residual_samples,
    verify_conditions,
)
from .errors import ConditionViolation, FitFailure, SearchFailure, UndefinedRatioError
from .helpers import drift, make_rng, relative_error
from .littlewood_paley import (
    CutoffProfile,
    almost_orthogonality,
    bernstein_check,
    block_energies,
    dyadic_sobolev,
    j_cover,
    j_max,
    lipschitz_block_bounds,
)
from .osgood_weight import REGISTRY_NAMES, CarlemanWeight, get_modulus, is_osgood, ode_residual
from .paraproduct import (
    Paraproduct,
    apply,
    apply_adjoint,
    choose_m,
    fit_paraproduct_constants,
    positivity_forms,
)
from .report import KIND_BOUND, KIND_DECAY, KIND_FIT, KIND_IDENTITY, Check, VerificationReport, emit_plot_data, provenance
from .spectral_core import SpectralField, TorusGrid, load_field, random_field, refine, sobolev_norm

_LOGGER = logging.getLogger(__name__)

EXPECTED_OSGOOD = {"linear": True, "log": True, "sqrt": False, "holder:0.5": False}
DRIFT_LIMIT = 0.1
C_HAT_DRIFT_LIMIT = 0.05
M_SAMPLE_TIMES = 8


def _grid(params: dict[str, Any], key: str = CONF_GRID_POINTS, doubled: bool = False) -> TorusGrid:
    n = params[key] * (2 if doubled else 1)
    return TorusGrid(1, n, params[CONF_PERIOD])


def _grid_info(grid: TorusGrid) -> dict[str, Any]:
    return {"dimension": grid.dimension, "points_per_axis": grid.points_per_axis, "period": grid.period}


# ---- weight


def run_weight(params: dict[str, Any]) -> VerificationReport:
    mu = get_modulus(params[CONF_MU])
    T, alpha, gamma = params[CONF_HORIZON], params[CONF_ALPHA], params[CONF_GAMMA]
    report = VerificationReport("weight", provenance=provenance(params[CONF_SEED]))
    modulus = mu.check()
    report.add(Check.flag("modulus_invariants", KIND_IDENTITY, modulus.passed))
    classified = {name: is_osgood(get_modulus(name)) for name in REGISTRY_NAMES}
    report.add(Check.flag("is_osgood_registry", KIND_IDENTITY, classified == EXPECTED_OSGOOD))

    weight = CarlemanWeight(mu, gamma, T, alpha, params[CONF_T_MAX])
    end = min(gamma * T, weight.tau_limit)
    report.add(Check.upper("ode_residual", KIND_BOUND, float(np.max(ode_residual(weight))), 1e-6))
    if mu.name == "linear":
        tau = np.linspace(0.0, 0.999 * end, 200)
        gap = float(np.max(np.abs(np.expm1(weight.log_psi(tau) - weight.inner_integral(tau)))))
        report.add(Check.upper("closed_form_psi", KIND_IDENTITY, gap, 1e-8))

    t = 0.5 * T * np.linspace(1e-3, 1.0, 400)
    t = t[gamma * (T - t) < weight.tau_limit]
    floor = (0.5 * T) ** (alpha - 1.0) - 1e-9
    report.add(Check.lower("phi_second_floor", KIND_BOUND, float(np.min(weight.psi_prime(gamma * (T - t)))), floor))

    s = np.linspace(0.0, weight.phi_max, 1000)
    report.add(
        Check.lower("phi_inverse_dominates", KIND_BOUND, float(np.min(weight.log_phi_inverse(s) - np.log1p(s))), -1e-12)
    )

    half = 0.5 * end
    value, _, _ = weight.Phi_gamma(half)
    nodes = np.linspace(0.0, half, 2**14 + 1)
    refined = float(simpson(weight.psi(nodes), x=nodes))
    report.add(Check.upper("Phi_refinement", KIND_IDENTITY, abs(value - refined) / refined, 1e-7))

    tau = np.linspace(0.0, 0.99 * end, 101)
    report.plot_table = (
        ("tau", "log_psi", "Phi", "Phi_second"),
        [
            {"tau": a, "log_psi": b, "Phi": c, "Phi_second": d}
            for a, b, c, d in zip(tau, weight.log_psi(tau), weight.Phi_values(tau), weight.psi_prime(tau))
        ],
    )
    report.data.update(
        {"mu": mu.name, "gamma": gamma, "alpha": alpha, "horizon": T, "modulus_checks": modulus.checks,
         "is_osgood": classified, "phi_max": weight.phi_max, "tau_limit": weight.tau_limit}
    )
    return report


# ---- Littlewood-Paley


def _band_limited(grid: TorusGrid, seed: int, stream: str, max_frequency: float) -> SpectralField:
    return random_field(grid, make_rng(seed, stream), max_frequency=max_frequency)


def run_lp(params: dict[str, Any]) -> VerificationReport:
    seed, s = params[CONF_SEED], params[CONF_SOBOLEV_S]
    grid = _grid(params)
    cut = CutoffProfile()
    report = VerificationReport("lp", provenance=provenance(seed, _grid_info(grid)))

    top = j_cover(grid, cut)
    xi = np.linspace(0.0, 2.0 ** (top + 1), 20_001)
    total = cut.chi(xi) + sum(cut.phi_cut(xi * 2.0**-j) for j in range(1, top + 1))
    report.add(Check.upper("telescoping_partition", KIND_IDENTITY, float(np.max(np.abs(total - cut.chi(xi * 2.0**-top)))), 1e-14))

    rng = make_rng(seed, "lp-ensemble")
    members = [random_field(grid, rng) for _ in range(params[CONF_ENSEMBLE])]
    report.add(Check.upper("almost_orthogonality", KIND_IDENTITY, max(almost_orthogonality(u, cut) for u in members), 1e-12))
    bernstein = 0.0
    for u in members:
        for h in range(j_max(grid, cut) + 1):
            try:
                bernstein = max(bernstein, bernstein_check(u, h, cut) / 2.0 ** (h + 1))
            except UndefinedRatioError:
                _LOGGER.debug("lp: block %d vanishes on a member, skipped", h)
    report.add(Check.upper("bernstein_ratio", KIND_BOUND, bernstein, 1.0))

    band = grid.nyquist / 8.0
    coarse = _band_limited(grid, seed, "lp-lipschitz", band)
    fine = _band_limited(_grid(params, doubled=True), seed, "lp-lipschitz", band)
    lip_coarse, lip_fine = lipschitz_block_bounds(coarse, cut), lipschitz_block_bounds(fine, cut)
    for name in ("block_constant", "gradient_constant"):
        first, second = getattr(lip_coarse, name), getattr(lip_fine, name)
        report.add(Check.flag(f"lipschitz_{name}_finite", KIND_FIT, math.isfinite(first) and first > 0.0))
        report.add(Check.upper(f"lipschitz_{name}_drift", KIND_FIT, drift(first, second), DRIFT_LIMIT))
    ratio_coarse = dyadic_sobolev(coarse, s, cut) / sobolev_norm(coarse, s)
    ratio_fine = dyadic_sobolev(fine, s, cut) / sobolev_norm(fine, s)
    report.add(Check.upper("sobolev_equivalence_drift", KIND_FIT, drift(ratio_coarse, ratio_fine), DRIFT_LIMIT))

    u = load_field(params[CONF_FIELD]) if params[CONF_FIELD] else members[0]
    levels = j_cover(u.grid, cut) + 1
    norms = np.sqrt(block_energies(u, cut, levels))
    report.plot_table = (
        ("j", "norm", "weighted_norm"),
        [{"j": j, "norm": float(v), "weighted_norm": float(2.0 ** (j * s) * v)} for j, v in enumerate(norms)],
    )
    report.data.update(
        {
            "block_norms": norms,
            "sobolev_ratio": dyadic_sobolev(u, s, cut) / sobolev_norm(u, s),
            "lipschitz": lip_coarse._asdict(),
            "s": s,
        }
    )
    return report


# ---- paraproduct


def default_symbol(grid: TorusGrid) -> SpectralField:
    """Smooth real symbol with minimum 0.65."""
    return SpectralField.from_function(grid, lambda x: 1.0 + 0.25 * np.sin(x) + 0.1 * np.cos(3.0 * x))


def run_paraproduct(params: dict[str, Any]) -> VerificationReport:
    seed, lambda0 = params[CONF_SEED], params[CONF_LAMBDA0]
    grid = _grid(params)
    symbol = load_field(params[CONF_SYMBOL]) if params[CONF_SYMBOL] is not None else default_symbol(grid)
    grid = symbol.grid
    report = VerificationReport("paraproduct", provenance=provenance(seed, _grid_info(grid)))
    cut = CutoffProfile()

    if params[CONF_M] == "auto":
        try:
            choice = choose_m(symbol, lambda0, make_rng(seed, "choose-m"), params[CONF_CHOOSE_M_ENSEMBLE])
        except SearchFailure as err:
            report.add(Check.flag("choose_m", KIND_BOUND, False))
            report.data["choose_m_error"] = err.reason
            return report
        m, margin = choice.m, choice.margin
        report.data["choose_m"] = choice._asdict()
    else:
        m = params[CONF_M]
        m_rng = make_rng(seed, "choose-m")
        batch = np.stack([random_field(grid, m_rng, s=1.0).physical_values for _ in range(params[CONF_CHOOSE_M_ENSEMBLE])])
        form, energy = positivity_forms([[symbol]], m, batch, cut)
        margin = float(np.min(form / energy)) - 0.5 * lambda0
    report.add(Check.lower("positivity_margin", KIND_BOUND, margin, 0.0))

    rng = make_rng(seed, "pp-identities")
    u = random_field(grid, rng)
    constant = SpectralField(grid, np.full(grid.shape, 1.7))
    identity_gap = relative_error(apply(Paraproduct(constant, m), u).physical_values, 1.7 * u.physical_values)
    report.add(Check.upper("constant_symbol_identity", KIND_IDENTITY, identity_gap, 1e-12))

    p = Paraproduct(symbol, m)
    adjoint_gap = 0.0
    for _ in range(20):
        first, second = random_field(grid, rng), random_field(grid, rng)
        lhs = apply(p, first).inner(second)
        rhs = first.inner(apply_adjoint(p, second))
        adjoint_gap = max(adjoint_gap, abs(lhs - rhs) / (apply(p, first).norm() * second.norm()))
    report.add(Check.upper("adjoint_pairing", KIND_IDENTITY, adjoint_gap, 1e-10))

    band = grid.nyquist / 4.0
    ensemble = params[CONF_ENSEMBLE]
    fit = {"ensemble": ensemble, "band": True, "max_frequency": band, "level": CONSTANT_FIT_LEVEL}
    constants = fit_paraproduct_constants(p, make_rng(seed, "pp-fit"), **fit)
    reseeded = fit_paraproduct_constants(p, make_rng(seed + 1, "pp-fit"), **fit)
    fine = fit_paraproduct_constants(Paraproduct(refine(symbol), m), make_rng(seed, "pp-fit"), **fit)
    for name, value in constants._asdict().items():
        report.add(Check.flag(f"{name}_finite", KIND_FIT, math.isfinite(value) and value > 0.0))
        report.add(Check.upper(f"{name}_grid_drift", KIND_FIT, drift(value, getattr(fine, name)), DRIFT_LIMIT))
        report.add(Check.upper(f"{name}_reseed_drift", KIND_FIT, drift(value, getattr(reseeded, name)), DRIFT_LIMIT))
    report.data["constants"] = constants._asdict()
    report.data["constant_level"] = CONSTANT_FIT_LEVEL
    report.data["m"] = m
    return report


# ---- coefficients


def _coefficient(params: dict[str, Any], delta_key: str = CONF_DELTA) -> CoefficientField:
    if params[CONF_COEFFS]:
        return load_coefficient(params[CONF_COEFFS])
    if params[CONF_FAMILY] == "identity":
        return identity_coefficient()
    return synthetic_coefficient(params[CONF_ALPHA], get_modulus(params[CONF_MU]), params[delta_key], params[CONF_HORIZON])


def run_coeffs(params: dict[str, Any]) -> VerificationReport:
    a = _coefficient(params)
    report = VerificationReport("coeffs", provenance=provenance(params[CONF_SEED]))
    check = a.check()
    report.add(Check.flag("coefficient_regularity", KIND_BOUND, check.passed))
    report.data["coefficient"] = {
        "name": a.name,
        "lambda0": a.lambda0,
        "ellipticity_min": check.ellipticity_min,
        "holder_quotient": check.holder_quotient,
        "holder_constant": a.holder_constant,
        "osgood_quotient": max(q for _, q in check.osgood_quotients),
        "osgood_constant": a.osgood_blowup_constant,
        "lipschitz_quotient": check.lipschitz_quotient,
    }
    if params[CONF_VERIFY] == "none":
        return report

    shallow, deep, drift_c1, drift_c2 = mollifier_drift(a, params[CONF_DEPTH])
    report.add(Check.flag("mollifier_constants_finite", KIND_FIT, math.isfinite(deep.c1) and math.isfinite(deep.c2)))
    report.add(Check.upper("mollifier_c1_drift", KIND_FIT, drift_c1, DRIFT_LIMIT))
    report.add(Check.upper("mollifier_c2_drift", KIND_FIT, drift_c2, DRIFT_LIMIT))

    small = TorusGrid(1, 64)
    times = np.linspace(0.0, a.horizon, 64)
    floor = math.inf
    for eps in deep.epsilons:
        values = mollify(a, eps).values(times, small)
        matrices = np.moveaxis(values, (1, 2), (-2, -1)).reshape(-1, values.shape[1], values.shape[1])
        floor = min(floor, float(np.min(np.linalg.eigvalsh(matrices))))
    report.add(Check.lower("mollified_ellipticity", KIND_BOUND, floor, a.lambda0 - 1e-12))

    defect = mollify(a, deep.epsilons[0]).mass_defect
    if abs(defect) > 1e-10:
        _LOGGER.warning("mollifier kernel: continuous mass defect %.3e of the discretely normalized kernel", defect)
    report.data["mass_defect"] = defect
    report.data["mollifier"] = {"shallow": shallow._asdict(), "deep": deep._asdict()}
    report.plot_table = (
        ("epsilon", "c1", "c2"),
        [{"epsilon": e, "c1": c1, "c2": c2} for e, c1, c2 in zip(deep.epsilons, deep.c1_columns, deep.c2_columns)],
    )
    return report


# ---- Carleman harness


def _gamma0(gammas: list[float], passed: dict[float, bool]) -> float | None:
    gamma0 = None
    for gamma in reversed(gammas):
        if not passed[gamma]:
            break
        gamma0 = gamma
    return gamma0


def _carleman_m(params: dict[str, Any], a: CoefficientField, grid: TorusGrid) -> int:
    if params[CONF_M] != "auto":
        return int(params[CONF_M])
    times = np.linspace(0.5 * a.horizon / M_SAMPLE_TIMES, 0.5 * a.horizon, M_SAMPLE_TIMES)
    coeff = a.values(times, grid)
    d = grid.dimension
    chosen = 1
    for i, t in enumerate(times):
        matrix = [[SpectralField(grid, coeff[i, j, k]) for k in range(d)] for j in range(d)]
        choice = choose_m(matrix, a.lambda0, make_rng(params[CONF_SEED], "carleman-m"), params[CONF_CHOOSE_M_ENSEMBLE])
        _LOGGER.debug("carleman: m=%d suffices at t=%.4g", choice.m, t)
        chosen = max(chosen, choice.m)
    return chosen


def run_carleman(params: dict[str, Any]) -> VerificationReport:
    seed = params[CONF_SEED]
    grid = _grid(params, CONF_CARLEMAN_GRID_POINTS)
    report = VerificationReport("carleman", provenance=provenance(seed, _grid_info(grid)))
    gammas = list(params[CONF_GAMMAS])
    extended = [*gammas, 2.0 * gammas[-1]]
    mu = get_modulus(params[CONF_MU])
    coefficients = {"identity": identity_coefficient()}
    coefficients["synthetic"] = (
        load_coefficient(params[CONF_COEFFS])
        if params[CONF_COEFFS]
        else synthetic_coefficient(params[CONF_ALPHA], mu, params[CONF_CARLEMAN_DELTA], params[CONF_HORIZON])
    )
    shapes = build_ensemble(grid, make_rng(seed, "carleman-ensemble"), params[CONF_CARLEMAN_ENSEMBLE], params[CONF_MAX_BLOCK])
    rows: list[dict[str, Any]] = []
    for label, a in coefficients.items():
        m = _carleman_m(params, a, grid)
        try:
            fit = fit_constants(
                shapes, extended, a, mu,
                alpha=params[CONF_ALPHA], horizon=params[CONF_HORIZON], t_max=params[CONF_T_MAX],
                family=ADAPTED, m=m, cells=params[CONF_TIME_CELLS], final3_floor=params[CONF_FINAL3_FLOOR],
            )
        except FitFailure as err:
            report.add(Check.flag(f"{label}.fit", KIND_FIT, False))
            report.data[label] = {"error": err.reason, **err.details}
            continue
        everything = [r for reports in fit.reports.values() for r in reports]
        report.add(Check.upper(f"{label}.form_agreement", KIND_IDENTITY, max(r.form_agreement for r in everything), 1e-8))
        identity_error = max((e.identity_error for r in everything for e in r.block_energies), default=0.0)
        report.add(Check.upper(f"{label}.block_identity", KIND_IDENTITY, identity_error, 1e-8))

        base_gamma0 = _gamma0(gammas, fit.final3_passed)
        if base_gamma0 is None:
            report.add(Check.flag(f"{label}.final3", KIND_BOUND, False))
        else:
            base_c = min(min(fit.ratio_table[g]) for g in gammas if g >= base_gamma0)
            report.add(Check.lower(f"{label}.C_hat", KIND_FIT, base_c, math.ulp(0.0)))
            report.add(Check.upper(f"{label}.C_hat_drift", KIND_FIT, drift(base_c, fit.C_hat), C_HAT_DRIFT_LIMIT))
            max_block = params[CONF_MAX_BLOCK]
            final3 = all(
                row.passed
                for g in gammas if g >= base_gamma0
                for r in fit.reports[g]
                for row in r.per_block_table
                if row.case_tag == FINAL3 and row.h <= max_block
            )
            report.add(Check.flag(f"{label}.final3", KIND_BOUND, final3))
        report.data[label] = {
            "coefficient": a.name,
            "m": m,
            "C_hat": fit.C_hat,
            "gamma0_hat": fit.gamma0_hat,
            "ratio_table": {str(g): ratios for g, ratios in fit.ratio_table.items()},
            "final3_passed": {str(g): ok for g, ok in fit.final3_passed.items()},
            "per_block": {str(g): [r.as_dict()["per_block_table"] for r in fit.reports[g][:1]] for g in gammas},
        }
        rows.extend(
            {"coefficient": label, "gamma": g, "member": i, "ratio": ratio}
            for g, ratios in fit.ratio_table.items()
            for i, ratio in enumerate(ratios)
        )
    report.plot_table = (("coefficient", "gamma", "member", "ratio"), rows)
    return report


# ---- counterexample


def _condition_kind(name: str) -> str:
    if "decay" in name or name == "vanishing":
        return KIND_DECAY
    if any(part in name for part in ("drift", "growth", "slope")):
        return KIND_FIT
    return KIND_BOUND


def _add_conditions(report: VerificationReport, data: CounterexampleData) -> None:
    try:
        conditions = verify_conditions(data)
    except ConditionViolation as err:
        report.add(Check.flag(err.reason, KIND_DECAY, False))
        report.data["witnesses"] = err.table
        return
    for name, ok in conditions.checks.items():
        report.add(Check.flag(name, _condition_kind(name), ok))
    report.data["conditions"] = conditions.values
    report.data["witnesses"] = conditions.tables["witnesses"]
    report.data["decay_certificates"] = conditions.tables["decay_certificates"]


def run_counterexample(params: dict[str, Any]) -> VerificationReport:
    seed, N = params[CONF_SEED], params[CONF_INTERVALS]
    j0 = None if params[CONF_J0] == "auto" else params[CONF_J0]
    data = build_counterexample(j0, N, params[CONF_L_SIGN])
    seq = data.seq
    report = VerificationReport("counterexample", provenance=provenance(seed))
    report.data.update({"j0": seq.j0, "N": N, "l_sign": data.l_sign, "growth": seq.growth._asdict()})
    if j0 is None:
        report.add(Check.flag("j0_stable_under_doubling", KIND_FIT, choose_j0(2 * N, data.bumps) == seq.j0))

    rng = make_rng(seed, "counterexample")
    samples = params[CONF_RESIDUAL_SAMPLES]
    report.add(Check.upper("residual_native", KIND_IDENTITY, residual_samples(data, rng, samples), 1e-10))
    forward = flip_time(data)
    report.add(Check.upper("residual_forward", KIND_IDENTITY, residual_samples(forward, rng, samples), 1e-10))
    gaps = junction_profile(data, rng.uniform(-np.pi, np.pi, 64), rng.uniform(-np.pi, np.pi, 64))
    report.data["worst_junction"] = int(np.argmax(gaps)) + 1
    report.add(Check.upper("junction_mismatch", KIND_IDENTITY, float(np.max(gaps)), 1e-12))

    if params[CONF_VERIFY] != "none":
        _add_conditions(report, data)

    vanish = decay_certificate(seq, data.bumps, 0, 5)
    report.add(Check.upper("vanishing_from_half", KIND_DECAY, float("inf") if vanish is None else vanish, N // 2))

    sweep = lower_order_sweep(data, rng)
    report.add(
        Check.flag("lower_order_finite", KIND_BOUND, all(math.isfinite(v) for v in (sweep.sup_b1, sweep.sup_b2, sweep.sup_c)))
    )
    report.add(Check.upper("lower_order_tail", KIND_DECAY, sweep.second_half, sweep.first_half))
    report.data["lower_order"] = sweep._asdict()

    if params[CONF_EMIT_GRID]:
        times = np.concatenate((np.geomspace(abs(seq.a[-1]), abs(seq.a[0]), 24), [0.0, -0.1]))
        xs = np.linspace(-np.pi, np.pi, 9)
        emit_plot_data(eval_grid(forward, times, xs, xs), params[CONF_EMIT_GRID])
    return report


SUITE_RUNNERS: dict[str, Callable[[dict[str, Any]], VerificationReport]] = {
    "weight": run_weight,
    "lp": run_lp,
    "paraproduct": run_paraproduct,
    "coeffs": run_coeffs,
    "carleman": run_carleman,
    "counterexample": run_counterexample,
}
