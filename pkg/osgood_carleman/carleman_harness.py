"""Both sides of the weighted estimate, per-block energies and fitted constants.

Test functions are stored as ``u(t, x) = exp(l(t)) * sigma(t) * w(x)``:
``sigma`` is a smooth bump on the support window, ``w`` a field on the torus
and ``l`` a log-amplitude. Conjugating by the weight only shifts ``l`` by
``+-Phi_gamma(gamma(T-t))/gamma``, so nothing is ever exponentiated before it
is integrated. Time integrals are composite Simpson sums taken in log space
(or with one common scale factored out when the integrand changes sign).

The ``adapted`` family carries ``l = -Phi/gamma``, so its conjugate is the
bare product ``sigma * w``; the ``plain`` family has ``l = 0``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Any, Callable, NamedTuple, Sequence, Union

import numpy as np
from scipy.optimize import brentq

from .coefficients import CoefficientField
from .errors import ConfigurationError, DomainError, FitFailure, SupportError
from .helpers import bump, log_simpson, simpson_weights
from .littlewood_paley import CutoffProfile, dyadic_block, j_max
from .osgood_weight import CarlemanWeight, ModulusOfContinuity, UnitWeight
from .paraproduct import Paraproduct
from .spectral_core import (
    SpaceTimeField,
    SpectralField,
    TorusGrid,
    derivative_values,
    inner_values,
    norm_values,
    random_field,
)

_LOGGER = logging.getLogger(__name__)

Weight = Union[CarlemanWeight, UnitWeight]
LogAmplitude = Callable[[np.ndarray], "tuple[np.ndarray, np.ndarray]"]

PLAIN = "plain"
ADAPTED = "adapted"
FAMILIES = (PLAIN, ADAPTED)

H0 = "h0"
LOW_PHASE = "low_phase"
HIGH_PHASE = "high_phase"
FINAL3 = "final3"
PENALTY = "penalty"

GRADED_RATIO = 1.2


# ---- time grids


def time_grid(
    window: tuple[float, float],
    cells: int = 256,
    graded: bool = False,
    horizon: float = 1.0,
    ratio: float = GRADED_RATIO,
) -> np.ndarray:
    """Simpson nodes on ``window``; an odd cell count is rounded up.

    The graded grid starts with a cell of ``1e-4 * horizon`` at the left edge
    and grows geometrically by ``ratio`` until a cap that makes the cells fill
    the window exactly.
    """
    start, stop = window
    cells = max(2, cells + cells % 2)
    if not graded:
        return np.linspace(start, stop, cells + 1)
    length = stop - start
    first = 1e-4 * horizon
    if first * cells >= length:
        return np.linspace(start, stop, cells + 1)
    growth = first * ratio ** np.arange(cells)

    def shortfall(cap: float) -> float:
        return float(np.sum(np.minimum(growth, cap))) - length

    if shortfall(length) < 0.0:
        raise ConfigurationError(
            f"{cells} cells with ratio {ratio} cannot cover a window of length {length:g}", "short_graded_grid"
        )
    cap = brentq(shortfall, first, length, xtol=1e-15 * length)
    nodes = start + np.concatenate(([0.0], np.cumsum(np.minimum(growth, cap))))
    nodes[-1] = stop
    return nodes


# ---- test functions


@dataclass(frozen=True, eq=False)
class TestFunction:
    """``exp(l(t)) sigma(t) w(x)`` with ``sigma`` a bump on ``window``."""

    __test__ = False

    shape: SpectralField
    horizon: float = 1.0
    window: tuple[float, float] | None = None
    log_amplitude: LogAmplitude | None = None
    family: str = PLAIN

    def __post_init__(self) -> None:
        if self.window is None:
            object.__setattr__(self, "window", (self.horizon / 8.0, 3.0 * self.horizon / 8.0))
        start, stop = self.window
        if not stop > start:
            raise ConfigurationError(f"empty support window {self.window}", "bad_window")

    @property
    def grid(self) -> TorusGrid:
        return self.shape.grid

    def envelope(self, t: Any) -> tuple[np.ndarray, np.ndarray]:
        """``sigma(t) = exp(1 - 1/(1-s^2))`` in the window coordinate s, and ``sigma'``."""
        t = np.asarray(t, dtype=float)
        start, stop = self.window
        centre, radius = 0.5 * (start + stop), 0.5 * (stop - start)
        s = (t - centre) / radius
        return math.e * bump(s), math.e * bump(s, 1) / radius

    def amplitude(self, t: Any) -> tuple[np.ndarray, np.ndarray]:
        """``(l(t), l'(t))``."""
        t = np.asarray(t, dtype=float)
        if self.log_amplitude is None:
            return np.zeros_like(t), np.zeros_like(t)
        return self.log_amplitude(t)

    def support_certificate(self, tol: float = 1e-12) -> float:
        """Largest ``|sigma|`` outside the window; the window must sit in (0, T/2]."""
        start, stop = self.window
        if start <= 0.0 or stop > 0.5 * self.horizon:
            raise SupportError(
                f"support window {self.window} is not inside (0, T/2] with T={self.horizon:g}",
                f"window_outside:{start:g},{stop:g}",
            )
        outside = np.concatenate((np.linspace(0.0, start, 64), np.linspace(stop, 0.5 * self.horizon, 64)))
        leak = float(np.max(np.abs(self.envelope(outside)[0])))
        if leak > tol:
            raise SupportError(f"test function leaks {leak:.3e} outside its window", "support_leak")
        return leak

    def space_time(self, times: Any) -> SpaceTimeField:
        """Samples with the exact time derivative attached."""
        times = np.asarray(times, dtype=float)
        sigma, dsigma = self.envelope(times)
        ell, dell = self.amplitude(times)
        scale = np.exp(ell)
        w = self.shape.physical_values
        values = (scale * sigma)[:, None] * w.reshape(1, -1)
        dt = (scale * (dsigma + dell * sigma))[:, None] * w.reshape(1, -1)
        shape = (times.size, *self.grid.shape)
        return SpaceTimeField(self.grid, times, values.reshape(shape), dt.reshape(shape))

    def scaled(self, factor: complex) -> "TestFunction":
        return replace(self, shape=self.shape * factor)


def _check_pair(u: TestFunction, weight: Weight) -> None:
    if not math.isclose(u.horizon, weight.horizon, rel_tol=1e-12):
        raise ConfigurationError(
            f"test function horizon {u.horizon:g} differs from the weight's {weight.horizon:g}", "horizon_mismatch"
        )


def conjugate(u: TestFunction, weight: Weight, sign: int = 1) -> TestFunction:
    """``exp(sign * Phi_gamma(gamma(T-t)) / gamma) * u``; the product rule acts on ``l``."""
    _check_pair(u, weight)
    start, stop = u.window
    half = 0.5 * weight.horizon
    if start <= 0.0 or stop > half:
        raise DomainError(
            f"weight is only evaluated for t in (0, T/2], window is {u.window}", "weight_out_of_range"
        )
    base = u.log_amplitude

    def log_amplitude(t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        t = np.asarray(t, dtype=float)
        if np.any(t <= 0.0) or np.any(t > half * (1.0 + 1e-14)):
            raise DomainError("weight is only evaluated for t in (0, T/2]", "weight_out_of_range")
        ell, dell = base(t) if base is not None else (np.zeros_like(t), np.zeros_like(t))
        profile = weight.time_profile(t)
        return ell + sign * profile.exponent, dell + sign * profile.exponent_dt

    return replace(u, log_amplitude=log_amplitude)


def plain_test_function(shape: SpectralField, horizon: float = 1.0, window: tuple[float, float] | None = None) -> TestFunction:
    return TestFunction(shape, horizon, window, family=PLAIN)


def adapted_test_function(
    shape: SpectralField, weight: Weight, window: tuple[float, float] | None = None
) -> TestFunction:
    """Member whose conjugate is ``sigma(t) w(x)``."""
    return replace(conjugate(plain_test_function(shape, weight.horizon, window), weight, sign=-1), family=ADAPTED)


def make_member(
    shape: SpectralField, family: str, weight: Weight, window: tuple[float, float] | None = None
) -> TestFunction:
    if family == PLAIN:
        return plain_test_function(shape, weight.horizon, window)
    if family == ADAPTED:
        return adapted_test_function(shape, weight, window)
    raise ConfigurationError(f"unknown test-function family {family!r}", f"bad_family:{family}")


def build_ensemble(
    grid: TorusGrid,
    rng: np.random.Generator,
    size: int,
    max_block: int = 6,
    cut: CutoffProfile | None = None,
) -> list[SpectralField]:
    """Single-block shapes ``h = 0..min(max_block, J_max)`` followed by random band-limited ones."""
    cut = cut or CutoffProfile()
    shapes: list[SpectralField] = []
    for h in range(min(max_block, j_max(grid, cut)) + 1):
        block = dyadic_block(random_field(grid, rng), h, cut)
        shapes.append(block * (1.0 / block.norm()))
    while len(shapes) < size:
        shapes.append(random_field(grid, rng, band=True, max_frequency=0.5 * grid.nyquist))
    return shapes


# ---- the weighted operator


def _divergence_values(a: CoefficientField, grid: TorusGrid, times: np.ndarray, w: np.ndarray) -> np.ndarray:
    """``sum_jk d_j(a_jk(t, .) d_k w)`` for every time, shape ``(nt, *grid.shape)``."""
    coeff = a.values(times, grid)
    d = grid.dimension
    if coeff.shape[1:3] != (d, d):
        raise ConfigurationError(f"coefficient matrix {coeff.shape[1:3]} does not fit dimension {d}", "size_mismatch")
    gradients = [derivative_values(w, grid, k) for k in range(d)]
    out = np.zeros((times.size, *grid.shape), dtype=complex)
    for j in range(d):
        flux = sum(coeff[:, j, k] * gradients[k] for k in range(d))
        out += derivative_values(flux, grid, j)
    return out


def weighted_operator_log(
    v: TestFunction, a: CoefficientField, weight: Weight, times: Any
) -> tuple[np.ndarray, np.ndarray]:
    """``apply_weighted_operator`` on a time batch as ``(l(t), mantissa)``; the value is ``exp(l) * mantissa``."""
    _check_pair(v, weight)
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if np.any(times <= 0.0) or np.any(times > 0.5 * weight.horizon):
        reason = "excluded_endpoint" if np.any(times == 0.0) else "weight_out_of_range"
        raise DomainError(f"operator is evaluated for t in (0, T/2], got [{times.min()}, {times.max()}]", reason)
    sigma, dsigma = v.envelope(times)
    ell, dell = v.amplitude(times)
    phi_prime = weight.time_profile(times).phi_prime
    w = v.shape.physical_values
    expand = (-1, *([1] * v.grid.dimension))
    div = _divergence_values(a, v.grid, times, w)
    mantissa = (dsigma + (dell + phi_prime) * sigma).reshape(expand) * w + sigma.reshape(expand) * div
    return ell, mantissa


def apply_weighted_operator(v: TestFunction, a: CoefficientField, weight: Weight, t: float) -> SpectralField:
    """``d_t v + sum_jk d_j(a_jk d_k v) + Phi_gamma'(gamma(T-t)) v`` at one time."""
    ell, mantissa = weighted_operator_log(v, a, weight, float(t))
    return SpectralField(v.grid, np.exp(ell[0]) * mantissa[0])


# ---- reports


class BlockEnergy(NamedTuple):
    """The four terms of the per-block expansion, in units of ``exp(log_scale)``."""

    h: int
    dt_term: float
    operator_term: float
    gamma_term: float
    cross_term: float
    lhs: float
    identity_error: float
    l2: float
    log_scale: float


class BlockBound(NamedTuple):
    h: int
    case_tag: str
    lower_bound_value: float
    measured_value: float
    passed: bool
    details: dict[str, Any]


@dataclass
class CarlemanReport:
    gamma: float
    lhs: float
    rhs_gradient_part: float
    rhs_l2_part: float
    ratio: float
    log_lhs: float = float("-inf")
    log_rhs_gradient_part: float = float("-inf")
    log_rhs_l2_part: float = float("-inf")
    form_agreement: float = 0.0  # |lhs(u form) / lhs(v form) - 1|
    per_block_table: list[BlockBound] = field(default_factory=list)
    block_energies: list[BlockEnergy] = field(default_factory=list)

    def as_dict(self) -> dict[str, Any]:
        return {
            "gamma": self.gamma,
            "lhs": self.lhs,
            "rhs_gradient_part": self.rhs_gradient_part,
            "rhs_l2_part": self.rhs_l2_part,
            "ratio": self.ratio,
            "form_agreement": self.form_agreement,
            "per_block_table": [row._asdict() for row in self.per_block_table],
            "block_energies": [row._asdict() for row in self.block_energies],
        }


# ---- per-block sweep


class _BlockSweep:
    """Shared time data for the per-block quantities of one conjugated member."""

    def __init__(
        self,
        v: TestFunction,
        a: CoefficientField,
        weight: Weight,
        times: np.ndarray,
        m: int,
        cut: CutoffProfile,
    ) -> None:
        self.v, self.a, self.weight, self.times, self.m, self.cut = v, a, weight, times, m, cut
        self.grid = v.grid
        self.sigma, dsigma = v.envelope(times)
        ell, dell = v.amplitude(times)
        self.q = dsigma + dell * self.sigma
        self.profile = weight.time_profile(times)
        live = self.sigma != 0.0
        top = float(np.max(ell[live])) if live.any() else 0.0
        self.log_scale = 2.0 * top
        self.weights = simpson_weights(times) * np.where(live, np.exp(2.0 * (ell - top)), 0.0)
        coeff = a.values(times, self.grid)
        d = self.grid.dimension
        self.slices = [
            [[Paraproduct(SpectralField(self.grid, coeff[i, j, k]), m, cut) for k in range(d)] for j in range(d)]
            for i in range(times.size)
        ]
        self._blocks: dict[int, tuple[np.ndarray, np.ndarray]] = {}

    def integrate(self, integrand: np.ndarray) -> float:
        return float(np.dot(self.weights, integrand))

    def block(self, h: int) -> tuple[np.ndarray, np.ndarray]:
        """``(w_h, A(t) w_h)`` with ``A = sum_jk d_j T^m_{a_jk} d_k``."""
        if h not in self._blocks:
            grid, d = self.grid, self.grid.dimension
            w_h = dyadic_block(self.v.shape, h, self.cut).physical_values
            gradients = [derivative_values(w_h, grid, k) for k in range(d)]
            operator = np.zeros((self.times.size, *grid.shape), dtype=complex)
            for i, rows in enumerate(self.slices):
                for j in range(d):
                    flux = sum(rows[j][k].apply_values(gradients[k]) for k in range(d))
                    operator[i] += derivative_values(flux, grid, j)
            self._blocks[h] = (w_h, operator)
        return self._blocks[h]

    def energy(self, h: int) -> BlockEnergy:
        w_h, operator = self.block(h)
        grid, sigma, q = self.grid, self.sigma, self.q
        phi_prime = self.profile.phi_prime
        norm_w = float(norm_values(w_h, grid))
        expand = (-1, *([1] * grid.dimension))
        shifted = operator + phi_prime.reshape(expand) * w_h
        full = q.reshape(expand) * w_h + sigma.reshape(expand) * shifted
        dt_term = self.integrate(q**2 * norm_w**2)
        operator_term = self.integrate(sigma**2 * norm_values(shifted, grid) ** 2)
        gamma_term = self.integrate(self.weight.gamma * self.profile.phi_second * sigma**2 * norm_w**2)
        cross_term = self.integrate(2.0 * q * sigma * inner_values(operator, w_h, grid).real)
        lhs = self.integrate(norm_values(full, grid) ** 2)
        total = dt_term + operator_term + gamma_term + cross_term
        error = abs(lhs - total) / lhs if lhs > 0.0 else abs(total)
        row = BlockEnergy(
            h, dt_term, operator_term, gamma_term, cross_term, lhs, error, self.integrate(sigma**2 * norm_w**2), self.log_scale
        )
        _LOGGER.debug("block %d energy: %s", h, row)
        return row

    def penalty_profile(self, h: int) -> np.ndarray:
        """``2^{4h} min{eps^a, t^(a-1) mu(eps)} + 2^{2h} (min{eps^(a-1), t^(a-1) mu(eps)/eps} + 1)``."""
        eps = 0.5 if h == 0 else 4.0**-h
        alpha, mu = self.a.alpha, self.a.mu
        blow = self.times ** (alpha - 1.0)
        mu_eps = float(mu(eps))
        return 16.0**h * np.minimum(eps**alpha, blow * mu_eps) + 4.0**h * (
            np.minimum(eps ** (alpha - 1.0), blow * mu_eps / eps) + 1.0
        )

    def bounds(self, h: int, final3_floor: float) -> list[BlockBound]:
        energy = self.energy(h)
        gamma = self.weight.gamma
        rows: list[BlockBound] = []
        if energy.l2 <= 0.0:
            return rows
        if h == 0:
            lower = 0.5 * gamma * energy.l2
            rows.append(BlockBound(0, H0, lower, energy.lhs, energy.lhs >= lower, {"log_scale": energy.log_scale}))
        else:
            rows.extend(self._phase_rows(h))
        ratio = energy.lhs / ((gamma + math.sqrt(gamma) * 4.0**h) * energy.l2)
        rows.append(BlockBound(h, FINAL3, final3_floor, ratio, ratio >= final3_floor, {}))
        w_h, _ = self.block(h)
        norm_w = float(norm_values(w_h, self.grid))
        penalty = self.integrate(self.penalty_profile(h) * self.sigma**2 * norm_w**2)
        needed = max(0.0, -(energy.dt_term + energy.cross_term)) / penalty
        rows.append(BlockBound(h, PENALTY, 0.0, needed, math.isfinite(needed), {"epsilon": 0.5 if h == 0 else 4.0**-h}))
        return rows

    def _phase_rows(self, h: int) -> list[BlockBound]:
        w_h, operator = self.block(h)
        lam = self.a.lambda0
        threshold = lam / 16.0 * 4.0**h
        phi_prime, phi_second = self.profile.phi_prime, self.profile.phi_second
        live = self.sigma != 0.0
        high = live & (phi_prime > threshold)
        low = live & ~high
        rows: list[BlockBound] = []
        if high.any():
            bound = self.times ** (self.weight.alpha - 1.0) * threshold**2 * float(self.weight.mu(4.0**-h))
            ratio = np.where(high, phi_second / bound, np.inf)
            i = int(np.argmin(ratio))
            rows.append(
                BlockBound(
                    h, HIGH_PHASE, float(bound[i]), float(phi_second[i]), bool(ratio[i] >= 1.0 - 1e-9),
                    {"times": int(high.sum()), "t": float(self.times[i])},
                )
            )
        if low.any():
            per_unit = norm_values(operator, self.grid) / float(norm_values(w_h, self.grid))
            holds = low & (per_unit >= lam / 8.0 * 4.0**h)
            chosen = holds if holds.any() else low
            margin = np.where(chosen, per_unit - phi_prime, np.inf)
            i = int(np.argmin(margin))
            rows.append(
                BlockBound(
                    h, LOW_PHASE, threshold, float(margin[i]), bool(holds.any() and margin[i] >= threshold * (1.0 - 1e-9)),
                    {"times": int(low.sum()), "ellipticity_holds": int(holds.sum()), "t": float(self.times[i])},
                )
            )
        return rows


def per_block_energy(
    v: TestFunction,
    a: CoefficientField,
    weight: Weight,
    h: int,
    m: int = 1,
    cells: int = 256,
    graded: bool = False,
    cut: CutoffProfile | None = None,
) -> BlockEnergy:
    """Four-term expansion of ``int ||d_t v_h + A v_h + Phi' v_h||^2`` for the conjugated member ``v``."""
    _check_pair(v, weight)
    times = time_grid(v.window, cells, graded, v.horizon)
    return _BlockSweep(v, a, weight, times, m, cut or CutoffProfile()).energy(h)


def per_block_lower_bounds(
    v: TestFunction,
    a: CoefficientField,
    weight: Weight,
    h: int,
    m: int = 1,
    final3_floor: float = 1e-3,
    cells: int = 256,
    graded: bool = False,
    cut: CutoffProfile | None = None,
) -> list[BlockBound]:
    """Case rows for block ``h``: h0 or the two phases, then final3 and the penalty constant."""
    _check_pair(v, weight)
    times = time_grid(v.window, cells, graded, v.horizon)
    return _BlockSweep(v, a, weight, times, m, cut or CutoffProfile()).bounds(h, final3_floor)


# ---- both sides


def carleman_sides(
    u: TestFunction,
    a: CoefficientField,
    weight: Weight,
    m: int = 1,
    cells: int = 256,
    graded: bool = False,
    per_block: bool = True,
    levels: int | None = None,
    final3_floor: float = 1e-3,
    cut: CutoffProfile | None = None,
) -> CarlemanReport:
    """``int ||e^{Phi/gamma}(d_t u + div(a grad u))||^2`` against
    ``sqrt(gamma) (int ||grad v||^2 + sqrt(gamma) int ||v||^2)``, in both the u and v forms."""
    cut = cut or CutoffProfile()
    u.support_certificate()
    v = conjugate(u, weight)
    times = time_grid(u.window, cells, graded, u.horizon)
    grid = u.grid
    w = u.shape.physical_values
    expand = (-1, *([1] * grid.dimension))
    sigma, dsigma = u.envelope(times)
    ell_u, dell_u = u.amplitude(times)
    profile = weight.time_profile(times)
    u_form = (dsigma + dell_u * sigma).reshape(expand) * w + sigma.reshape(expand) * _divergence_values(a, grid, times, w)
    ell_v, v_form = weighted_operator_log(v, a, weight, times)
    grad_sq = np.float64(sum(float(norm_values(derivative_values(w, grid, k), grid)) ** 2 for k in range(grid.dimension)))
    with np.errstate(divide="ignore"):
        log_sigma = 2.0 * np.log(np.abs(sigma))
        log_lhs_u = log_simpson(2.0 * (ell_u + profile.exponent) + 2.0 * np.log(norm_values(u_form, grid)), times)
        log_lhs = log_simpson(2.0 * ell_v + 2.0 * np.log(norm_values(v_form, grid)), times)
        log_grad = log_simpson(2.0 * ell_v + log_sigma + np.log(grad_sq), times)
        log_l2 = log_simpson(2.0 * ell_v + log_sigma + 2.0 * np.log(float(norm_values(w, grid))), times)

    root = math.sqrt(weight.gamma)
    if math.isinf(log_lhs):
        ratio, agreement = 0.0, 0.0
    else:
        log_rhs = 0.5 * math.log(weight.gamma) + np.logaddexp(log_grad, math.log(root) + log_l2)
        ratio = math.exp(log_lhs - log_rhs)
        agreement = abs(math.expm1(log_lhs_u - log_lhs))
    with np.errstate(over="ignore"):
        report = CarlemanReport(
            weight.gamma,
            float(np.exp(log_lhs)),
            float(np.exp(log_grad)),
            float(np.exp(log_l2)),
            ratio,
            log_lhs,
            log_grad,
            log_l2,
            agreement,
        )
    if per_block and not math.isinf(log_lhs):
        sweep = _BlockSweep(v, a, weight, times, m, cut)
        top = j_max(grid, cut) if levels is None else levels
        for h in range(top + 1):
            report.block_energies.append(sweep.energy(h))
            report.per_block_table.extend(sweep.bounds(h, final3_floor))
    _LOGGER.debug(
        "carleman_sides gamma=%g: log lhs %.6e, ratio %.6e, form agreement %.2e",
        weight.gamma, log_lhs, ratio, agreement,
    )
    return report


# ---- fitted constants


class FittedConstants(NamedTuple):
    C_hat: float
    gamma0_hat: float
    ratio_table: dict[float, list[float]]
    final3_passed: dict[float, bool]
    reports: dict[float, list[CarlemanReport]]


def _check_gammas(gammas: Sequence[float]) -> list[float]:
    gammas = [float(g) for g in gammas]
    if not gammas:
        raise ConfigurationError("fit_constants needs a non-empty gamma list", "empty_gammas")
    if len(gammas) < 3:
        raise ConfigurationError(f"fit_constants needs at least 3 gammas, got {len(gammas)}", "few_gammas")
    steps = np.diff(np.log(gammas))
    if np.any(steps <= 0.0) or not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
        raise ConfigurationError(f"gammas {gammas} are not an increasing geometric progression", "not_geometric")
    return gammas


def fit_constants(
    shapes: Sequence[SpectralField],
    gammas: Sequence[float],
    a: CoefficientField,
    mu: ModulusOfContinuity,
    alpha: float = 0.5,
    horizon: float = 1.0,
    t_max: float = 1e150,
    family: str = ADAPTED,
    m: int = 1,
    cells: int = 256,
    graded: bool = False,
    final3_floor: float = 1e-3,
    window: tuple[float, float] | None = None,
) -> FittedConstants:
    """Empirical ``(C, gamma0)``: gamma0 is the smallest tested gamma from which
    every larger one passes the final3 check on every member, C the smallest
    ratio over those gammas."""
    gammas = _check_gammas(gammas)
    if len(shapes) < 10:
        raise ConfigurationError(f"fit_constants needs at least 10 members, got {len(shapes)}", "small_ensemble")
    table: dict[float, list[float]] = {}
    passed: dict[float, bool] = {}
    reports: dict[float, list[CarlemanReport]] = {}
    for gamma in gammas:
        weight = CarlemanWeight(mu, gamma, horizon, alpha, t_max)
        members = [make_member(shape, family, weight, window) for shape in shapes]
        reports[gamma] = [
            carleman_sides(u, a, weight, m=m, cells=cells, graded=graded, final3_floor=final3_floor) for u in members
        ]
        table[gamma] = [r.ratio for r in reports[gamma]]
        passed[gamma] = all(row.passed for r in reports[gamma] for row in r.per_block_table if row.case_tag == FINAL3)
        _LOGGER.info("gamma=%g: min ratio %.4e, final3 %s", gamma, min(table[gamma]), passed[gamma])
    gamma0 = None
    for gamma in reversed(gammas):
        if not passed[gamma]:
            break
        gamma0 = gamma
    if gamma0 is None:
        raise FitFailure(
            f"no tested gamma passes final3 with floor {final3_floor:g}",
            "no_gamma_passes",
            ratio_table=table,
            final3_passed=passed,
        )
    c_hat = min(min(table[g]) for g in gammas if g >= gamma0)
    if not c_hat > 0.0:
        raise FitFailure(f"fitted constant is not positive: {c_hat}", "nonpositive_constant", ratio_table=table)
    return FittedConstants(c_hat, gamma0, table, passed, reports)
