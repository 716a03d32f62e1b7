"""Moduli of continuity, the Osgood condition and the Carleman weight.

Key facts:
  - Everything is driven by the reciprocal integral
    ``G(y) = int_{e^-y}^1 ds / mu(s)``, tabulated once per modulus on a
    uniform y-grid (step 0.05) with 16-point Gauss-Legendre panels. Then
    ``phi(t) = G(log t)`` and ``phi'(t) = G'(log t) / t``.
  - ``psi_gamma(tau) = phi^{-1}(gamma * int_0^{tau/gamma} (T-s)^(alpha-1) ds)``
    with the inner integral in closed form, and
    ``Phi_gamma(tau) = int_0^tau psi_gamma``.
  - ``Phi_gamma''`` always comes from the right side of the weight ODE
    ``psi' = (T - tau/gamma)^(alpha-1) * psi^2 * mu(1/psi)``, never from
    differencing.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Any, Callable, NamedTuple

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import PchipInterpolator
from scipy.special import roots_legendre

from .errors import ConfigurationError, DomainError, TableRangeError

_LOGGER = logging.getLogger(__name__)

TABLE_STEP = 0.05
TABLE_Y_MAX = 700.0
_GL_NODES, _GL_WEIGHTS = roots_legendre(16)
_INVARIANT_TOL = 1e-12


class ModulusReport(NamedTuple):
    passed: bool
    checks: dict[str, bool]


@dataclass(frozen=True, eq=False)
class ModulusOfContinuity:
    """A modulus ``mu`` on [0, 1].

    ``log_integrand(y)`` is ``e^-y / mu(e^-y)``, the integrand of ``G``; it is
    supplied separately when the direct formula would underflow.
    """

    name: str
    evaluator: Callable[[np.ndarray], np.ndarray]
    closed_form_integral: Callable[[np.ndarray], np.ndarray] | None = None
    log_integrand: Callable[[np.ndarray], np.ndarray] | None = None

    def __call__(self, s: Any) -> np.ndarray:
        return self.evaluator(np.asarray(s, dtype=float))

    def ratio(self, s: Any) -> np.ndarray:
        """``mu(s) / s`` for ``s`` in (0, 1]."""
        s = np.asarray(s, dtype=float)
        if self.log_integrand is not None:
            return 1.0 / self.log_integrand(-np.log(s))
        return self(s) / s

    def integrand(self, y: Any) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if self.log_integrand is not None:
            return self.log_integrand(y)
        s = np.exp(-y)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = s / self(s)
        return np.where(s > 0.0, out, 0.0)

    @cached_property
    def reciprocal_table(self) -> tuple[np.ndarray, np.ndarray]:
        """Nodes ``y_k = k * TABLE_STEP`` and ``G(y_k)`` up to ``TABLE_Y_MAX``."""
        y = np.arange(0.0, TABLE_Y_MAX + 0.5 * TABLE_STEP, TABLE_STEP)
        mid = 0.5 * (y[1:] + y[:-1])
        half = 0.5 * TABLE_STEP
        nodes = mid[:, None] + half * _GL_NODES[None, :]
        panels = half * (self.integrand(nodes) @ _GL_WEIGHTS)
        return y, np.concatenate(([0.0], np.cumsum(panels)))

    def check(self, samples: int = 10_000) -> ModulusReport:
        """Sampled modulus invariants plus the derived sigma-monotonicity facts."""
        s = np.linspace(0.0, 1.0, samples)
        mu = self(s)
        tol = _INVARIANT_TOL
        checks: dict[str, bool] = {}
        checks["endpoints"] = abs(float(mu[0])) <= tol and abs(float(mu[-1]) - 1.0) <= tol
        checks["dominates_identity"] = bool(np.all(mu >= s - tol))
        ratio = self.ratio(s[1:])
        checks["ratio_non_increasing"] = bool(np.all(np.diff(ratio) <= tol * np.abs(ratio[:-1])))
        concave = True
        for stride in (1, 10, 100, 1000):
            if 2 * stride >= samples:
                break
            left, mid, right = mu[: -2 * stride], mu[stride:-stride], mu[2 * stride :]
            concave &= bool(np.all(mid >= 0.5 * (left + right) - tol))
        checks["midpoint_concave"] = concave
        sigma = np.geomspace(1.0, 1e6, samples)
        grow = self.ratio(1.0 / sigma)  # sigma * mu(1/sigma)
        checks["sigma_mu_non_decreasing"] = bool(np.all(np.diff(grow) >= -tol * grow[1:]))
        shrink = 1.0 / (sigma * grow)
        checks["inverse_non_increasing"] = bool(np.all(np.diff(shrink) <= tol * shrink[:-1]))
        return ModulusReport(all(checks.values()), checks)


# ---- registry


def _linear() -> ModulusOfContinuity:
    return ModulusOfContinuity(
        "linear",
        lambda s: s,
        closed_form_integral=lambda lower: -np.log(lower),
        log_integrand=lambda y: np.ones_like(y),
    )


def _log_modulus() -> ModulusOfContinuity:
    shift = math.log(math.e - 1.0)

    def evaluate(s: np.ndarray) -> np.ndarray:
        safe = np.where(s > 0.0, s, 1.0)
        return np.where(s > 0.0, s * np.logaddexp(shift, -np.log(safe)), 0.0)

    return ModulusOfContinuity("log", evaluate, log_integrand=lambda y: 1.0 / np.logaddexp(shift, y))


def _holder(exponent: float) -> ModulusOfContinuity:
    name = "sqrt" if exponent == 0.5 else f"holder:{exponent:g}"
    if exponent == 1.0:
        return _linear()
    return ModulusOfContinuity(
        name,
        lambda s: s**exponent,
        closed_form_integral=lambda lower: (1.0 - lower ** (1.0 - exponent)) / (1.0 - exponent),
        log_integrand=lambda y: np.exp(-(1.0 - exponent) * y),
    )


def get_modulus(name: str) -> ModulusOfContinuity:
    """Registry lookup: ``linear``, ``log``, ``sqrt`` or ``holder:a`` with a in (0, 1]."""
    if name == "linear":
        return _linear()
    if name == "log":
        return _log_modulus()
    if name == "sqrt":
        return _holder(0.5)
    if name.startswith("holder:"):
        try:
            exponent = float(name.split(":", 1)[1])
        except ValueError:
            exponent = float("nan")
        if 0.0 < exponent <= 1.0:
            return _holder(exponent)
    raise ConfigurationError(f"unknown modulus {name!r}", f"bad_mu:{name}")


REGISTRY_NAMES = ("linear", "log", "sqrt", "holder:0.5")


# ---- Osgood integral


def osgood_integral(mu: ModulusOfContinuity, lower: float) -> float:
    """``int_lower^1 ds / mu(s)`` on geometric panels ``[l, 2l], [2l, 4l], ...``."""
    if not lower > 0.0 or lower > 1.0:
        raise DomainError(f"lower limit must lie in (0, 1], got {lower}", f"bad_lower:{lower}")
    if lower == 1.0:
        return 0.0
    edges = [lower]
    while edges[-1] * 2.0 < 1.0:
        edges.append(edges[-1] * 2.0)
    edges.append(1.0)
    panels = [
        quad(lambda s: 1.0 / float(mu(s)), a, b, epsabs=0.0, epsrel=1e-12, limit=100)[0]
        for a, b in zip(edges[:-1], edges[1:])
    ]
    return math.fsum(panels)


def is_osgood(mu: ModulusOfContinuity, levels: int = 60, window: int = 10) -> bool:
    """Divergence test on the dyadic increments ``int_{2^-k}^{2^-k+1} ds/mu``.

    Divergent when the increments shrink by less than a factor two across the
    last ``window`` levels.
    """
    increments = []
    for k in range(1, levels + 1):
        a, b = 2.0**-k, 2.0 ** (1 - k)
        increments.append(quad(lambda s: 1.0 / float(mu(s)), a, b, epsabs=0.0, epsrel=1e-12)[0])
    shrink = increments[-1] / increments[-1 - window]
    _LOGGER.debug("is_osgood(%s): increment ratio over %d levels %.4f", mu.name, window, shrink)
    return shrink > 0.5


def reciprocal_integral(mu: ModulusOfContinuity, lower: Any) -> np.ndarray:
    """Vectorized ``int_lower^1 ds/mu(s)`` from the shared table (``lower`` in (0, 1])."""
    lower = np.asarray(lower, dtype=float)
    if np.any(lower <= 0.0) or np.any(lower > 1.0):
        raise DomainError("lower limit must lie in (0, 1]", "bad_lower")
    return _table_value(mu, -np.log(lower))


def _table_value(mu: ModulusOfContinuity, y: np.ndarray) -> np.ndarray:
    """``G(y)`` for ``y >= 0``: nearest lower node plus one Gauss-Legendre panel."""
    nodes_y, values = mu.reciprocal_table
    y = np.asarray(y, dtype=float)
    flat = y.reshape(-1)
    inside = np.minimum(flat, nodes_y[-1])
    k = np.minimum((inside / TABLE_STEP).astype(int), nodes_y.size - 1)
    start = nodes_y[k]
    half = 0.5 * (inside - start)
    mid = start + half
    out = values[k] + half * (mu.integrand(mid[:, None] + half[:, None] * _GL_NODES[None, :]) @ _GL_WEIGHTS)
    for index in np.flatnonzero(flat > nodes_y[-1]):
        out[index] += quad(lambda z: float(mu.integrand(z)), nodes_y[-1], float(flat[index]), limit=200)[0]
    return out.reshape(y.shape)


# ---- Carleman weight


class WeightProfile(NamedTuple):
    """Time profile of the conjugation at times t (tau = gamma (T - t))."""

    exponent: np.ndarray  # Phi_gamma(tau) / gamma
    exponent_dt: np.ndarray  # d/dt of the above, equals -psi_gamma(tau)
    phi_prime: np.ndarray  # Phi_gamma'(tau)
    phi_second: np.ndarray  # Phi_gamma''(tau)


@dataclass(frozen=True, eq=False)
class CarlemanWeight:
    """phi, psi_gamma and Phi_gamma for one (mu, gamma, T, alpha)."""

    mu: ModulusOfContinuity
    gamma: float
    horizon: float = 1.0
    alpha: float = 0.5
    t_max: float = 1e150

    def __post_init__(self) -> None:
        if not self.gamma > 0.0 or not self.horizon > 0.0:
            raise DomainError("gamma and horizon must be positive", "bad_weight_params")
        if not 0.0 < self.alpha < 1.0:
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha}", f"bad_alpha:{self.alpha}")
        if not 1.0 < self.t_max <= math.exp(TABLE_Y_MAX):
            raise DomainError(f"t_max out of range: {self.t_max}", "bad_t_max")

    # -- phi and its inverse

    @cached_property
    def _inverse_table(self) -> tuple[PchipInterpolator, float]:
        nodes_y, values = self.mu.reciprocal_table
        keep = nodes_y <= math.log(self.t_max) + 1e-12
        y, g = nodes_y[keep], values[keep]
        increasing = np.concatenate(([True], np.diff(g) > 0.0))
        stop = int(np.argmin(increasing)) if not increasing.all() else g.size
        return PchipInterpolator(g[:stop], y[:stop]), float(g[stop - 1])

    @property
    def phi_max(self) -> float:
        """Largest value of phi covered by the tabulation."""
        return self._inverse_table[1]

    def phi(self, t: Any) -> np.ndarray:
        """``phi(t) = int_{1/t}^1 ds/mu(s)`` for ``t >= 1``."""
        t = np.asarray(t, dtype=float)
        if np.any(t < 1.0):
            raise DomainError("phi is defined for t >= 1", "bad_t")
        return _table_value(self.mu, np.log(t))

    def phi_prime(self, t: Any) -> np.ndarray:
        """``1 / (t^2 mu(1/t))``."""
        t = np.asarray(t, dtype=float)
        if np.any(t < 1.0):
            raise DomainError("phi is defined for t >= 1", "bad_t")
        return self.mu.integrand(np.log(t)) / t

    def log_phi_inverse(self, s: Any) -> np.ndarray:
        """``log(phi^{-1}(s))``: monotone cubic guess plus two Newton steps."""
        s = np.asarray(s, dtype=float)
        if np.any(s < 0.0):
            raise DomainError("phi^{-1} needs s >= 0", "bad_s")
        interp, top = self._inverse_table
        if np.any(s > top):
            worst = float(np.max(s))
            raise TableRangeError(
                f"phi^{{-1}}({worst:.6g}) exceeds the table (max {top:.6g}); increase t_max beyond {self.t_max:.3g}",
                f"beyond_table:{worst:.6g}",
            )
        y = np.maximum(interp(s), 0.0)
        for _ in range(2):
            y = np.maximum(y - (_table_value(self.mu, y) - s) / self.mu.integrand(y), 0.0)
        return y

    def phi_inverse(self, s: Any) -> np.ndarray:
        return np.exp(self.log_phi_inverse(s))

    # -- psi and Phi

    def _check_tau(self, tau: np.ndarray) -> None:
        if np.any(tau < 0.0) or np.any(tau >= self.gamma * self.horizon):
            raise DomainError(
                f"tau must lie in [0, gamma*T) = [0, {self.gamma * self.horizon:g})", "tau_out_of_range"
            )

    def inner_integral(self, tau: Any) -> np.ndarray:
        """``gamma * int_0^{tau/gamma} (T-s)^(alpha-1) ds`` in closed form."""
        tau = np.asarray(tau, dtype=float)
        self._check_tau(tau)
        T, a = self.horizon, self.alpha
        return -self.gamma * T**a * np.expm1(a * np.log1p(-tau / (self.gamma * T))) / a

    def log_psi(self, tau: Any) -> np.ndarray:
        return self.log_phi_inverse(self.inner_integral(tau))

    def psi(self, tau: Any) -> np.ndarray:
        return np.exp(self.log_psi(tau))

    def psi_prime(self, tau: Any) -> np.ndarray:
        """Right side of the weight ODE, written as ``(T-tau/gamma)^(alpha-1) psi / G'(log psi)``."""
        tau = np.asarray(tau, dtype=float)
        log_psi = self.log_psi(tau)
        remaining = self.horizon - tau / self.gamma
        return remaining ** (self.alpha - 1.0) * np.exp(log_psi) / self.mu.integrand(log_psi)

    @property
    def tau_limit(self) -> float:
        """Supremum of tau whose psi stays inside the tabulation."""
        T, a, g = self.horizon, self.alpha, self.gamma
        left = 1.0 - a * self.phi_max / (g * T**a)
        if left <= 0.0:
            return g * T
        return g * T * (1.0 - left ** (1.0 / a))

    def Phi_gamma(self, tau: float) -> tuple[float, float, float]:  # noqa: N802
        """``(Phi_gamma(tau), Phi_gamma'(tau), Phi_gamma''(tau))`` with adaptive quadrature."""
        self._check_tau(np.asarray(tau))
        value = 0.0
        if tau > 0.0:
            value = quad(lambda x: float(self.psi(x)), 0.0, float(tau), epsabs=0.0, epsrel=1e-11, limit=200)[0]
        return value, float(self.psi(tau)), float(self.psi_prime(tau))

    def Phi_values(self, tau: Any) -> np.ndarray:  # noqa: N802
        """Vectorized ``Phi_gamma`` by cumulative Gauss-Legendre panels."""
        tau = np.asarray(tau, dtype=float)
        self._check_tau(tau)
        top = float(np.max(tau, initial=0.0))
        if top == 0.0:
            return np.zeros_like(tau)
        rate = float(self.psi_prime(top) / self.psi(top))
        panels = int(min(100_000, max(256, math.ceil(top * rate), math.ceil(256 * top / (self.gamma * self.horizon)))))
        edges = np.union1d(np.linspace(0.0, top, panels + 1), tau.reshape(-1))
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[1:] + edges[:-1])
        nodes = mid[:, None] + half[:, None] * _GL_NODES[None, :]
        pieces = half * (self.psi(nodes) @ _GL_WEIGHTS)
        cumulative = np.concatenate(([0.0], np.cumsum(pieces)))
        return cumulative[np.searchsorted(edges, tau)]

    def time_profile(self, t: Any) -> WeightProfile:
        """Conjugation data at physical times ``t`` in (0, T]."""
        t = np.asarray(t, dtype=float)
        tau = self.gamma * (self.horizon - t)
        phi_prime = self.psi(tau)
        return WeightProfile(self.Phi_values(tau) / self.gamma, -phi_prime, phi_prime, self.psi_prime(tau))


@dataclass(frozen=True)
class UnitWeight:
    """Weight with ``Phi_gamma == 0``: conjugation is the identity."""

    gamma: float = 1.0
    horizon: float = 1.0

    def time_profile(self, t: Any) -> WeightProfile:
        zero = np.zeros_like(np.asarray(t, dtype=float))
        return WeightProfile(zero, zero, zero, zero)


def ode_residual(weight: CarlemanWeight, samples: int = 1000) -> np.ndarray:
    """Relative residual of the psi ODE at ``samples`` taus, from a five-point stencil."""
    end = min(weight.gamma * weight.horizon, weight.tau_limit)
    tau = end * np.linspace(0.001, 0.999, samples)
    rhs = weight.psi_prime(tau)
    rate = rhs / weight.psi(tau)
    step = np.minimum.reduce([0.01 / rate, 0.01 * tau, 0.01 * (end - tau)])
    stencil = (
        -weight.psi(tau + 2 * step) + 8 * weight.psi(tau + step) - 8 * weight.psi(tau - step) + weight.psi(tau - 2 * step)
    ) / (12 * step)
    residual = np.abs(stencil - rhs) / rhs
    _LOGGER.debug("ode_residual(%s, gamma=%g): max %.3e", weight.mu.name, weight.gamma, float(residual.max()))
    return residual
