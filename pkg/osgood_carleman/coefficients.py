"""Coefficient fields a_jk(t, x), their time mollification and its estimates.

Key facts:
  - An evaluator maps ``(times[nt], grid)`` to an array
    ``(nt, d, d, *grid.shape)`` of symmetric real matrices.
  - Differences of matrices are measured entrywise (max absolute entry).
  - The mollifier kernel is ``exp(-1/(1-s^2))`` on (-1, 1), sampled at 64
    Gauss-Legendre nodes and normalized so the discrete rule has unit mass.
  - Before convolving, the base is frozen outside ``[eps, T]``.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any, Callable, NamedTuple

import numpy as np
from scipy.integrate import quad
from scipy.special import roots_legendre

from .errors import ConfigurationError, DomainError, PreconditionError
from .helpers import bump, drift
from .osgood_weight import ModulusOfContinuity, get_modulus, reciprocal_integral
from .spectral_core import TorusGrid

_LOGGER = logging.getLogger(__name__)

Evaluator = Callable[[np.ndarray, TorusGrid], np.ndarray]


def _times(t: Any) -> np.ndarray:
    return np.atleast_1d(np.asarray(t, dtype=float))


def _entry_gap(first: np.ndarray, second: np.ndarray, matrix_axes: tuple[int, int] = (1, 2)) -> np.ndarray:
    """Max absolute entry of ``first - second`` over the two matrix axes."""
    return np.max(np.abs(first - second), axis=matrix_axes)


class CoefficientReport(NamedTuple):
    passed: bool
    ellipticity_min: float
    holder_quotient: float
    osgood_quotients: list[tuple[float, float]]  # (t, sup quotient * t^(1-alpha))
    lipschitz_quotient: float


@dataclass(frozen=True, eq=False)
class CoefficientField:
    """Symmetric coefficient matrix with the regularity data it is claimed to satisfy."""

    evaluator: Evaluator
    lambda0: float
    alpha: float
    mu: ModulusOfContinuity
    horizon: float = 1.0
    holder_constant: float = 0.0
    osgood_blowup_constant: float = 0.0
    lipschitz_constant: float = 0.0
    time_derivative: Evaluator | None = None
    lower_order: dict[str, Callable[[np.ndarray, TorusGrid], np.ndarray]] = field(default_factory=dict)
    name: str = "custom"

    def values(self, t: Any, grid: TorusGrid) -> np.ndarray:
        return np.asarray(self.evaluator(_times(t), grid), dtype=float)

    def dt_values(self, t: Any, grid: TorusGrid) -> np.ndarray:
        if self.time_derivative is None:
            raise PreconditionError(f"coefficient {self.name!r} has no time derivative", "no_time_derivative")
        return np.asarray(self.time_derivative(_times(t), grid), dtype=float)

    def lower_order_sup(self, times: Any, grid: TorusGrid) -> dict[str, float]:
        """Sup norms of the bounded lower-order fields b_j, c."""
        return {key: float(np.max(np.abs(func(_times(times), grid)))) for key, func in self.lower_order.items()}

    def check(self, grid: TorusGrid | None = None, time_samples: int = 32, pair_samples: int = 141) -> CoefficientReport:
        """Brute-force ellipticity, Hoelder, weighted-Osgood and x-Lipschitz quotients."""
        T = self.horizon
        small = TorusGrid(1 if grid is None else grid.dimension, 64, 2.0 * math.pi if grid is None else grid.period)
        times = np.geomspace(1e-4 * T, T, time_samples)
        values = self.values(times, small)
        d = values.shape[1]
        matrices = np.moveaxis(values, (1, 2), (-2, -1)).reshape(-1, d, d)
        ellipticity = float(np.min(np.linalg.eigvalsh(matrices)))

        uniform = np.linspace(0.0, T, 200)
        sampled = self.values(uniform, small)
        i, j = np.triu_indices(uniform.size, k=1)
        gaps = np.max(_entry_gap(sampled[i], sampled[j]).reshape(i.size, -1), axis=1)
        holder = float(np.max(gaps / np.abs(uniform[i] - uniform[j]) ** self.alpha))

        osgood: list[tuple[float, float]] = []
        for t in times[:-1]:
            s = np.linspace(t, T, pair_samples)
            window = self.values(s, small)
            a, b = np.triu_indices(s.size, k=1)
            gaps = np.max(_entry_gap(window[a], window[b]).reshape(a.size, -1), axis=1)
            quotient = float(np.max(gaps / self.mu(np.minimum(np.abs(s[a] - s[b]), 1.0))))
            osgood.append((float(t), quotient * t ** (1.0 - self.alpha)))

        lip = 0.0
        coords = small.coordinates
        flat_x = np.stack([c.reshape(-1) for c in coords], axis=-1)
        delta = np.abs(flat_x[:, None, :] - flat_x[None, :, :])
        delta = np.minimum(delta, small.period - delta)
        distance = np.sqrt(np.sum(delta**2, axis=-1))
        off = distance > 0
        for t_index in range(0, times.size, 8):
            slab = values[t_index].reshape(d, d, -1)
            gap = np.max(np.abs(slab[:, :, :, None] - slab[:, :, None, :]), axis=(0, 1))
            lip = max(lip, float(np.max(gap[off] / distance[off])))

        tol = 1e-9
        passed = (
            ellipticity >= self.lambda0 - 1e-12
            and holder <= self.holder_constant * (1 + tol) + 1e-12
            and max(q for _, q in osgood) <= self.osgood_blowup_constant * (1 + tol) + 1e-12
            and lip <= self.lipschitz_constant * (1 + tol) + 1e-12
        )
        report = CoefficientReport(passed, ellipticity, holder, osgood, lip)
        _LOGGER.debug("coefficient %s check: %s", self.name, report)
        return report


def _scalar_identity(factor: np.ndarray, d: int) -> np.ndarray:
    """``factor[..., *shape] * Id`` as ``(nt, d, d, *shape)``."""
    eye = np.eye(d).reshape((1, d, d) + (1,) * (factor.ndim - 1))
    return factor[:, None, None] * eye


def identity_coefficient(dimension: int = 1, lambda0: float = 1.0) -> CoefficientField:
    def evaluate(t: np.ndarray, grid: TorusGrid) -> np.ndarray:
        return _scalar_identity(np.ones((t.size, *grid.shape)), grid.dimension)

    def derivative(t: np.ndarray, grid: TorusGrid) -> np.ndarray:
        return _scalar_identity(np.zeros((t.size, *grid.shape)), grid.dimension)

    del dimension  # the grid fixes the matrix size
    return CoefficientField(evaluate, lambda0, 0.5, get_modulus("linear"), time_derivative=derivative, name="identity")


def synthetic_coefficient(
    alpha: float, mu: ModulusOfContinuity, delta: float, horizon: float = 1.0
) -> CoefficientField:
    """``(1 + delta g(t) (1 + sin(x1)/4)) Id`` with
    ``g(t) = (4/5) (t/T)^alpha sin(int_{t/T}^1 ds/mu(s))``.

    |g (1 + sin/4)| <= 1, so lambda0 = 1 - delta. The constants stored on the
    field are the analytic bounds: Hoelder ``delta (1+alpha) / (alpha T^alpha)``,
    weighted Osgood ``delta (1+alpha) / T^alpha``, x-Lipschitz ``delta / 5``.
    """
    if delta < 0.0:
        raise DomainError(f"delta must be >= 0, got {delta}", f"bad_delta:{delta}")
    if delta >= 1.0:
        raise PreconditionError(f"delta={delta} leaves no ellipticity", f"not_elliptic:{delta}")
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}", f"bad_alpha:{alpha}")
    if not 0.0 < horizon <= 1.0:
        raise DomainError("synthetic family needs 0 < T <= 1 so time gaps stay in mu's domain", "bad_horizon")
    T = horizon

    def profile(t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        tau = np.clip(t / T, 0.0, 1.0)
        positive = tau > 0.0
        safe = np.where(positive, tau, 1.0)
        phase = reciprocal_integral(mu, safe)
        g = np.where(positive, 0.8 * safe**alpha * np.sin(phase), 0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            dg = 0.8 / T * (alpha * safe ** (alpha - 1.0) * np.sin(phase) - safe**alpha * np.cos(phase) / mu(safe))
        return g, np.where(positive, dg, np.inf)

    def spatial(grid: TorusGrid) -> np.ndarray:
        return 1.0 + 0.25 * np.sin(grid.coordinates[0])

    def evaluate(t: np.ndarray, grid: TorusGrid) -> np.ndarray:
        g, _ = profile(t)
        factor = 1.0 + delta * g.reshape((-1,) + (1,) * grid.dimension) * spatial(grid)
        return _scalar_identity(factor, grid.dimension)

    def derivative(t: np.ndarray, grid: TorusGrid) -> np.ndarray:
        _, dg = profile(t)
        factor = delta * dg.reshape((-1,) + (1,) * grid.dimension) * spatial(grid)
        return _scalar_identity(factor, grid.dimension)

    return CoefficientField(
        evaluate,
        lambda0=1.0 - delta,
        alpha=alpha,
        mu=mu,
        horizon=T,
        holder_constant=delta * (1.0 + alpha) / (alpha * T**alpha),
        osgood_blowup_constant=delta * (1.0 + alpha) / T**alpha,
        lipschitz_constant=delta / 5.0,
        time_derivative=derivative,
        name=f"synthetic(delta={delta:g},alpha={alpha:g},mu={mu.name})",
    )


def coefficient_from_spec(spec: dict[str, Any]) -> CoefficientField:
    """Build a registered family from ``{"family": ..., parameters}``."""
    family = spec.get("family", "synthetic")
    if family == "identity":
        return identity_coefficient(int(spec.get("dimension", 1)), float(spec.get("lambda0", 1.0)))
    if family == "synthetic":
        return synthetic_coefficient(
            float(spec.get("alpha", 0.5)),
            get_modulus(str(spec.get("mu", "linear"))),
            float(spec.get("delta", 0.4)),
            float(spec.get("horizon", 1.0)),
        )
    raise ConfigurationError(f"unknown coefficient family {family!r}", f"bad_family:{family}")


def load_coefficient(path: str | Path) -> CoefficientField:
    return coefficient_from_spec(json.loads(Path(path).read_text(encoding="utf-8")))


# ---- mollification

_NODES, _WEIGHTS = roots_legendre(64)


@dataclass(frozen=True, eq=False)
class MollifiedCoefficient:
    """``a_eps(t) = int rho_eps(s) a~(t - s) ds`` with ``a~`` frozen outside [eps, T]."""

    base: CoefficientField
    epsilon: float

    def __post_init__(self) -> None:
        if not 0.0 < self.epsilon <= 0.5 * self.base.horizon:
            raise DomainError(
                f"epsilon must lie in (0, T/2], got {self.epsilon}", f"bad_epsilon:{self.epsilon}"
            )

    @cached_property
    def kernel_scale(self) -> float:
        """Normalization making the discrete kernel mass exactly one."""
        return 1.0 / float(np.sum(_WEIGHTS * bump(_NODES)))

    @property
    def mass_defect(self) -> float:
        """Continuous mass of the normalized kernel minus one."""
        return self.kernel_scale * quad(lambda s: float(bump(s)), -1.0, 1.0, epsabs=0.0, epsrel=1e-13)[0] - 1.0

    def _convolve(self, t: Any, grid: TorusGrid, order: int) -> np.ndarray:
        t = _times(t)
        eps = self.epsilon
        shifted = np.clip(t[:, None] - eps * _NODES[None, :], eps, self.base.horizon)
        raw = self.base.values(shifted.reshape(-1), grid)
        raw = raw.reshape((t.size, _NODES.size) + raw.shape[1:])
        weights = self.kernel_scale * _WEIGHTS * bump(_NODES, order) / eps**order
        return np.tensordot(weights, raw, axes=([0], [1]))

    def values(self, t: Any, grid: TorusGrid) -> np.ndarray:
        return self._convolve(t, grid, 0)

    def dt_values(self, t: Any, grid: TorusGrid) -> np.ndarray:
        """Convolution against ``rho_eps'``."""
        return self._convolve(t, grid, 1)

    def dtt_values(self, t: Any, grid: TorusGrid) -> np.ndarray:
        return self._convolve(t, grid, 2)

    def as_field(self) -> CoefficientField:
        base = self.base
        return CoefficientField(
            lambda t, grid: self.values(t, grid),
            base.lambda0,
            base.alpha,
            base.mu,
            base.horizon,
            time_derivative=lambda t, grid: self.dt_values(t, grid),
            name=f"{base.name}*rho[{self.epsilon:g}]",
        )


def mollify(base: CoefficientField, epsilon: float) -> MollifiedCoefficient:
    return MollifiedCoefficient(base, epsilon)


class MollifierReport(NamedTuple):
    epsilons: list[float]
    c1_columns: list[float]  # sup |a - a_eps| / min{eps^alpha, t^(alpha-1) mu(eps)}
    c2_columns: list[float]  # sup |d_t a_eps| / min{eps^(alpha-1), t^(alpha-1) mu(eps)/eps}
    c1: float
    c2: float


def verify_mollifier_estimates(
    base: CoefficientField,
    depth: int = 4,
    epsilons: list[float] | None = None,
    time_samples: int = 48,
    grid: TorusGrid | None = None,
) -> MollifierReport:
    """Fitted constants of the two mollifier estimates over ``eps = T 4^-h``, h = 1..depth."""
    T, alpha = base.horizon, base.alpha
    grid = grid or TorusGrid(1, 64)
    if epsilons is None:
        epsilons = [T * 4.0**-h for h in range(1, depth + 1)]
    times = np.geomspace(1e-4 * T, 0.5 * T, time_samples)
    exact = base.values(times, grid)
    c1_columns, c2_columns = [], []
    for eps in epsilons:
        smooth = mollify(base, eps)
        gap = np.max(_entry_gap(exact, smooth.values(times, grid)).reshape(times.size, -1), axis=1)
        slope = np.max(np.abs(smooth.dt_values(times, grid)).reshape(times.size, -1), axis=1)
        mu_eps = float(base.mu(min(eps, 1.0)))
        blow = times ** (alpha - 1.0)
        c1_columns.append(float(np.max(gap / np.minimum(eps**alpha, blow * mu_eps))))
        c2_columns.append(float(np.max(slope / np.minimum(eps ** (alpha - 1.0), blow * mu_eps / eps))))
        _LOGGER.debug("mollifier eps=%.3e: C1 %.4e C2 %.4e", eps, c1_columns[-1], c2_columns[-1])
    return MollifierReport(list(epsilons), c1_columns, c2_columns, max(c1_columns), max(c2_columns))


def mollifier_drift(base: CoefficientField, depth: int = 4, **kwargs: Any) -> tuple[MollifierReport, MollifierReport, float, float]:
    """Reports at ``depth`` and ``depth + 2`` with the relative drift of C1 and C2."""
    shallow = verify_mollifier_estimates(base, depth, **kwargs)
    deep = verify_mollifier_estimates(base, depth + 2, **kwargs)
    return shallow, deep, drift(shallow.c1, deep.c1), drift(shallow.c2, deep.c2)
