"""Littlewood-Paley decomposition on the torus.

Key facts:
  - psi(t) = 1 on [0, 11/10], 0 on [19/10, inf), smooth in between (the
    standard exp(-1/x) step). chi(xi) = psi(|xi|),
    phi_cut(xi) = chi(xi) - chi(2 xi).
  - Delta_0 = chi(D), Delta_j = phi_cut(2^-j D) for j >= 1,
    S_k = chi(2^-k D); the plateaus are exact zeros and ones.
  - dyadic_block refuses blocks whose outer edge 19/10 * 2^j passes the
    Nyquist frequency; low_pass accepts any k.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.special import expit

from .const import CUT_INNER, CUT_OUTER
from .errors import ConfigurationError, PreconditionError, ResolutionError, UndefinedRatioError
from .spectral_core import SpectralField, TorusGrid, derivative, derivative_values, inverse_values

_LOGGER = logging.getLogger(__name__)


def smooth_step(x: np.ndarray, derivative_order: int = 0) -> np.ndarray:
    """``f(x) / (f(x) + f(1-x))`` with ``f(x) = exp(-1/x)``, or its first/second derivative.

    Exactly 0 for x <= 0 and exactly 1 for x >= 1.
    """
    x = np.asarray(x, dtype=float)
    inside = (x > 0.0) & (x < 1.0)
    xi = np.where(inside, x, 0.5)
    g = 1.0 / xi - 1.0 / (1.0 - xi)
    step = expit(-g)
    if derivative_order == 0:
        return np.where(inside, step, np.where(x >= 1.0, 1.0, 0.0))
    product = step * expit(g)
    with np.errstate(over="ignore", invalid="ignore"):
        q = 1.0 / xi**2 + 1.0 / (1.0 - xi) ** 2
        first = np.where(product > 0.0, q * product, 0.0)
        if derivative_order == 1:
            return np.where(inside, first, 0.0)
        if derivative_order == 2:
            dq = -2.0 / xi**3 + 2.0 / (1.0 - xi) ** 3
            second = np.where(product > 0.0, dq * product + q * first * (1.0 - 2.0 * step), 0.0)
            return np.where(inside, second, 0.0)
    raise ConfigurationError(f"unsupported derivative order {derivative_order}", f"bad_order:{derivative_order}")


@dataclass(frozen=True)
class CutoffProfile:
    """Radial cutoff with plateaus ``[0, inner]`` and ``[outer, inf)``."""

    inner: float = CUT_INNER
    outer: float = CUT_OUTER

    def psi(self, t: np.ndarray) -> np.ndarray:
        return 1.0 - smooth_step((np.asarray(t, dtype=float) - self.inner) / (self.outer - self.inner))

    def chi(self, abs_xi: np.ndarray) -> np.ndarray:
        return self.psi(np.abs(abs_xi))

    def phi_cut(self, abs_xi: np.ndarray) -> np.ndarray:
        abs_xi = np.abs(np.asarray(abs_xi, dtype=float))
        return self.chi(abs_xi) - self.chi(2.0 * abs_xi)

    def low_multiplier(self, grid: TorusGrid, k: int) -> np.ndarray:
        return self.chi(grid.abs_wavenumber * 2.0**-k)

    def block_multiplier(self, grid: TorusGrid, j: int) -> np.ndarray:
        if j == 0:
            return self.chi(grid.abs_wavenumber)
        return self.phi_cut(grid.abs_wavenumber * 2.0**-j)

    def smoothness_check(self, steps: tuple[float, float] = (1e-3, 5e-4), max_order: int = 4) -> dict[int, tuple[float, float]]:
        """Sup of the k-th divided differences of psi on [0, 3] at two step sizes."""
        table: dict[int, tuple[float, float]] = {}
        for order in range(1, max_order + 1):
            sups = []
            for h in steps:
                t = np.arange(0.0, 3.0, h)
                values = self.psi(t)
                sups.append(float(np.max(np.abs(np.diff(values, n=order))) / h**order))
            table[order] = (sups[0], sups[1])
        return table


def j_max(grid: TorusGrid, cut: CutoffProfile | None = None) -> int:
    """Largest j whose block fits below Nyquist: ``outer * 2^j <= nyquist``."""
    cut = cut or CutoffProfile()
    return int(math.floor(math.log2(grid.nyquist / cut.outer) + 1e-12))


def j_cover(grid: TorusGrid, cut: CutoffProfile | None = None) -> int:
    """Smallest J with ``S_J = identity`` on the grid."""
    cut = cut or CutoffProfile()
    return max(0, int(math.ceil(math.log2(grid.max_frequency / cut.inner) - 1e-12)))


def required_grid_size(j: int, period: float, cut: CutoffProfile | None = None) -> int:
    """Smallest power-of-two point count resolving block ``j``."""
    cut = cut or CutoffProfile()
    needed = cut.outer * 2.0**j * period / math.pi
    return max(8, 1 << int(math.ceil(math.log2(needed) - 1e-12)))


def dyadic_block(u: SpectralField, j: int, cut: CutoffProfile | None = None, strict: bool = True) -> SpectralField:
    """``Delta_j u``; with ``strict`` the block must lie below Nyquist."""
    cut = cut or CutoffProfile()
    if j < 0:
        raise ConfigurationError(f"block index must be >= 0, got {j}", f"bad_block:{j}")
    if strict and cut.outer * 2.0**j > u.grid.nyquist:
        required = required_grid_size(j, u.grid.period, cut)
        raise ResolutionError(
            f"block {j} exceeds Nyquist {u.grid.nyquist:g}; needs {required} points per axis",
            f"beyond_nyquist:j={j}",
            required_points=required,
        )
    return u.apply_multiplier(cut.block_multiplier(u.grid, j))


def low_pass(u: SpectralField, k: int, cut: CutoffProfile | None = None) -> SpectralField:
    """``S_k u = chi(2^-k D) u``."""
    cut = cut or CutoffProfile()
    if k < 0:
        raise ConfigurationError(f"low-pass index must be >= 0, got {k}", f"bad_block:{k}")
    return u.apply_multiplier(cut.low_multiplier(u.grid, k))


@dataclass(frozen=True, eq=False)
class DyadicDecomposition:
    source: SpectralField
    blocks: list[SpectralField] = field(default_factory=list)
    j_max: int = 0

    def partial_sum(self, levels: int | None = None) -> SpectralField:
        """``sum_{j <= levels} Delta_j u``."""
        levels = len(self.blocks) - 1 if levels is None else levels
        total = SpectralField.zeros(self.source.grid)
        for block in self.blocks[: levels + 1]:
            total = total + block
        return total

    @property
    def remainder(self) -> SpectralField:
        """Energy above the last block, ``u - S_J u``."""
        return self.source - self.partial_sum()

    def norms(self) -> list[float]:
        return [block.norm() for block in self.blocks]


def decompose(u: SpectralField, cut: CutoffProfile | None = None, levels: int | None = None) -> DyadicDecomposition:
    """Blocks ``Delta_0 u .. Delta_J u`` with J defaulting to the alias-free limit."""
    cut = cut or CutoffProfile()
    top = j_max(u.grid, cut)
    levels = top if levels is None else levels
    blocks = [dyadic_block(u, j, cut) for j in range(levels + 1)]
    return DyadicDecomposition(u, blocks, top)


def block_energies(u: SpectralField, cut: CutoffProfile, levels: int) -> np.ndarray:
    """``||Delta_j u||^2`` for j = 0..levels, straight from the frequency array."""
    spectrum = np.abs(u.frequency_values) ** 2
    return np.array(
        [u.grid.cell_volume * float(np.sum(cut.block_multiplier(u.grid, j) ** 2 * spectrum)) for j in range(levels + 1)]
    )


def dyadic_sobolev(u: SpectralField, s: float, cut: CutoffProfile | None = None) -> float:
    """``(sum_j 2^(2js) ||Delta_j u||^2)^(1/2)`` over every block the grid carries."""
    cut = cut or CutoffProfile()
    levels = j_cover(u.grid, cut) + 1
    energies = block_energies(u, cut, levels)
    return float(np.sqrt(np.sum(4.0 ** (s * np.arange(levels + 1)) * energies)))


def almost_orthogonality(u: SpectralField, cut: CutoffProfile | None = None) -> float:
    """``max |<Delta_j u, Delta_k u>| / ||u||^2`` over pairs with ``|j - k| >= 2``."""
    cut = cut or CutoffProfile()
    blocks = [dyadic_block(u, j, cut, strict=False) for j in range(j_cover(u.grid, cut) + 2)]
    scale = u.norm() ** 2
    worst = 0.0
    for j, first in enumerate(blocks):
        for second in blocks[j + 2 :]:
            worst = max(worst, abs(first.inner(second)))
    return worst / scale if scale > 0.0 else worst


class LipschitzReport(NamedTuple):
    block_sup: float  # sup_j 2^j ||Delta_j a||_inf
    gradient_sup: float  # sup_k ||grad S_k a||_inf
    lipschitz_norm: float  # ||a||_inf + ||grad a||_inf
    block_constant: float
    gradient_constant: float


def _gradient_sup(values: np.ndarray, grid: TorusGrid) -> float:
    squares = sum(np.abs(derivative_values(values, grid, axis)) ** 2 for axis in range(grid.dimension))
    return float(np.sqrt(np.max(squares)))


def lipschitz_block_bounds(a: SpectralField, cut: CutoffProfile | None = None) -> LipschitzReport:
    """Both dyadic Lipschitz quantities and their ratios to ``||a||_Lip``."""
    cut = cut or CutoffProfile()
    if not a.is_real():
        raise PreconditionError("lipschitz_block_bounds needs a real symbol", "complex_symbol")
    grid = a.grid
    levels = j_cover(grid, cut)
    spectrum = a.frequency_values
    block_sup = 0.0
    gradient_sup = 0.0
    for j in range(levels + 1):
        block = inverse_values(spectrum * cut.block_multiplier(grid, j), grid)
        block_sup = max(block_sup, 2.0**j * float(np.max(np.abs(block))))
        low = inverse_values(spectrum * cut.low_multiplier(grid, j), grid)
        gradient_sup = max(gradient_sup, _gradient_sup(low, grid))
    values = a.physical_values
    lip = float(np.max(np.abs(values))) + _gradient_sup(values, grid)
    report = LipschitzReport(
        block_sup,
        gradient_sup,
        lip,
        block_sup / lip if lip > 0.0 else 0.0,
        gradient_sup / lip if lip > 0.0 else 0.0,
    )
    _LOGGER.debug("lipschitz_block_bounds: %s", report)
    return report


def bernstein_check(v: SpectralField, h: int, cut: CutoffProfile | None = None) -> float:
    """``max_j ||d_j v_h|| / ||v_h||`` for the block ``v_h = Delta_h v``."""
    cut = cut or CutoffProfile()
    block = dyadic_block(v, h, cut)
    size = block.norm()
    if size == 0.0 or size <= 1e-14 * v.norm():
        raise UndefinedRatioError(f"block {h} vanishes", f"zero_block:{h}")
    return max(derivative(block, axis).norm() for axis in range(v.grid.dimension)) / size
