"""Modified Bony paraproduct and its quantitative estimates.

``T^m_a u = S_{m-1}a * S_{m+1}u + sum_{k=m-1}^{K} S_k a * Delta_{k+3} u``

K is the first index with ``S_{K+3} = identity`` on the grid, so the
truncated sum is exact. All array-level helpers act on physical values with
arbitrary leading batch axes.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple, Sequence

import numpy as np

from .const import CHOOSE_M_CAP
from .errors import ConfigurationError, PreconditionError, SearchFailure
from .littlewood_paley import CutoffProfile, j_cover, lipschitz_block_bounds
from .spectral_core import (
    SpectralField,
    TorusGrid,
    apply_multiplier_values,
    derivative_values,
    forward_values,
    inner_values,
    inverse_values,
    norm_values,
    random_field,
    sobolev_norm,
)

_LOGGER = logging.getLogger(__name__)


def truncation_index(grid: TorusGrid, m: int, cut: CutoffProfile) -> int:
    """Smallest K >= m-1 with ``inner * 2^(K+3) >= max |xi|``."""
    needed = math.ceil(math.log2(grid.max_frequency / cut.inner) - 1e-12) - 3
    return max(m - 1, needed)


@dataclass(frozen=True, eq=False)
class Paraproduct:
    symbol: SpectralField
    m: int = 1
    cut: CutoffProfile = CutoffProfile()
    truncation_K: int | None = None

    def __post_init__(self) -> None:
        if self.m < 1:
            raise ConfigurationError(f"m must be >= 1, got {self.m}", f"bad_m:{self.m}")
        exact = truncation_index(self.symbol.grid, self.m, self.cut)
        if self.truncation_K is None:
            object.__setattr__(self, "truncation_K", exact)
        elif self.truncation_K < exact:
            raise ConfigurationError(
                f"truncation_K={self.truncation_K} drops blocks the grid carries (need {exact})", "short_truncation"
            )

    @property
    def grid(self) -> TorusGrid:
        return self.symbol.grid

    @cached_property
    def _terms(self) -> list[tuple[np.ndarray, np.ndarray]]:
        """(physical low-pass of a, multiplier applied to u) for every term."""
        grid, cut = self.grid, self.cut
        a_hat = self.symbol.frequency_values
        low = lambda k: inverse_values(a_hat * cut.low_multiplier(grid, k), grid)  # noqa: E731
        terms = [(low(self.m - 1), cut.low_multiplier(grid, self.m + 1))]
        for k in range(self.m - 1, self.truncation_K + 1):
            terms.append((low(k), cut.block_multiplier(grid, k + 3)))
        return terms

    def apply_values(self, values: np.ndarray) -> np.ndarray:
        u_hat = forward_values(values, self.grid)
        out = np.zeros(np.shape(values), dtype=complex)
        for low_a, multiplier in self._terms:
            out += low_a * inverse_values(u_hat * multiplier, self.grid)
        return out

    def adjoint_values(self, values: np.ndarray) -> np.ndarray:
        """``sum multiplier(D)(conj(S_k a) w)``; the multipliers are real and even."""
        out = np.zeros(np.shape(values), dtype=complex)
        for low_a, multiplier in self._terms:
            out += apply_multiplier_values(np.conj(low_a) * values, multiplier, self.grid)
        return out

    def _check(self, u: SpectralField) -> None:
        if u.grid != self.grid:
            raise ConfigurationError("argument and symbol live on different grids", "grid_mismatch")


def apply(p: Paraproduct, u: SpectralField) -> SpectralField:
    """``T^m_a u``."""
    p._check(u)
    return SpectralField(p.grid, p.apply_values(u.physical_values))


def apply_adjoint(p: Paraproduct, w: SpectralField) -> SpectralField:
    """``(T^m_a)^* w`` for the L2 pairing."""
    p._check(w)
    return SpectralField(p.grid, p.adjoint_values(w.physical_values))


def remainder(p: Paraproduct, u: SpectralField) -> SpectralField:
    """``a u - T^m_a u``."""
    p._check(u)
    return u.multiply(p.symbol) - apply(p, u)


def adjoint_defect(p: Paraproduct, u: SpectralField, j: int) -> float:
    """``||(T - T^*) d_j u||``."""
    p._check(u)
    du = derivative_values(u.physical_values, p.grid, j)
    return float(norm_values(p.apply_values(du) - p.adjoint_values(du), p.grid))


def block_commutator_norm(p: Paraproduct, u: SpectralField) -> float:
    """``(sum_h sum_{j,k} ||d_j [Delta_h, T] d_k u||^2)^(1/2)``."""
    p._check(u)
    grid, cut = p.grid, p.cut
    dims = range(grid.dimension)
    total = 0.0
    partials = [derivative_values(u.physical_values, grid, k) for k in dims]
    applied = [p.apply_values(f) for f in partials]
    for h in range(j_cover(grid, cut) + 2):
        block = cut.block_multiplier(grid, h)
        for f, tf in zip(partials, applied):
            commutator = apply_multiplier_values(tf, block, grid) - p.apply_values(apply_multiplier_values(f, block, grid))
            for j in dims:
                total += float(norm_values(derivative_values(commutator, grid, j), grid)) ** 2
    return math.sqrt(total)


# ---- positivity and the choice of m


class MChoice(NamedTuple):
    m: int
    margin: float  # min F / ||grad v||^2 - lambda0/2
    unsquared_margin: float  # min (F - lambda0/2 ||grad v||), the form as printed
    margins: dict[int, float]


def _as_matrix(symbols: SpectralField | Sequence[Sequence[SpectralField]]) -> list[list[SpectralField]]:
    if isinstance(symbols, SpectralField):
        return [[symbols]]
    return [list(row) for row in symbols]


def ellipticity_floor(matrix: list[list[SpectralField]]) -> float:
    """Pointwise minimum eigenvalue of a symmetric matrix symbol."""
    d = len(matrix)
    stacked = np.stack([np.stack([entry.physical_values.real for entry in row], axis=-1) for row in matrix], axis=-2)
    if not np.allclose(stacked, np.swapaxes(stacked, -1, -2), rtol=0.0, atol=1e-12):
        raise PreconditionError("matrix symbol is not symmetric", "asymmetric_symbol")
    return float(np.min(np.linalg.eigvalsh(stacked.reshape(-1, d, d))))


def positivity_forms(matrix: list[list[SpectralField]], m: int, batch: np.ndarray, cut: CutoffProfile) -> tuple[np.ndarray, np.ndarray]:
    """``Re sum_{j,k} <T_{a_jk} d_k v, d_j v>`` and ``||grad v||^2`` for a batch of fields."""
    grid = matrix[0][0].grid
    d = len(matrix)
    gradients = [derivative_values(batch, grid, axis) for axis in range(d)]
    form = np.zeros(batch.shape[0])
    for j in range(d):
        for k in range(d):
            entry = Paraproduct(matrix[j][k], m, cut)
            form += inner_values(entry.apply_values(gradients[k]), gradients[j], grid).real
    energy = sum(norm_values(g, grid) ** 2 for g in gradients)
    return form, energy


def choose_m(
    symbols: SpectralField | Sequence[Sequence[SpectralField]],
    lambda0: float,
    rng: np.random.Generator,
    ensemble: int = 200,
    cap: int = CHOOSE_M_CAP,
    cut: CutoffProfile | None = None,
) -> MChoice:
    """Smallest m <= cap with ``Re sum <T_{a_jk} d_k v, d_j v> >= lambda0/2 ||grad v||^2`` on the ensemble."""
    cut = cut or CutoffProfile()
    matrix = _as_matrix(symbols)
    floor = ellipticity_floor(matrix)
    if floor < lambda0 - 1e-12:
        raise PreconditionError(
            f"symbol ellipticity {floor:.6g} is below lambda0={lambda0:g}", f"not_elliptic:{floor:.6g}"
        )
    grid = matrix[0][0].grid
    batch = np.stack([random_field(grid, rng, s=1.0).physical_values for _ in range(ensemble)])
    margins: dict[int, float] = {}
    for m in range(1, cap + 1):
        form, energy = positivity_forms(matrix, m, batch, cut)
        margins[m] = float(np.min(form / energy)) - 0.5 * lambda0
        _LOGGER.debug("choose_m: m=%d margin %.4e", m, margins[m])
        if margins[m] >= 0.0:
            unsquared = float(np.min(form - 0.5 * lambda0 * np.sqrt(energy)))
            return MChoice(m, margins[m], unsquared, margins)
    raise SearchFailure(f"no m <= {cap} gives positivity; margins {margins}", "no_admissible_m", margins=margins)


# ---- fitted constants


class ParaproductConstants(NamedTuple):
    cont_T_s0: float
    cont_T_s1: float
    cont_a_minus_T: float
    adjoint: float
    commutator: float


def paraproduct_ratios(
    p: Paraproduct,
    rng: np.random.Generator,
    ensemble: int = 100,
    band: bool = False,
    max_frequency: float | None = None,
) -> np.ndarray:
    """Per-member ratios behind the four paraproduct estimates, shape ``(ensemble, 5)``."""
    grid = p.grid
    sup_a = float(np.max(np.abs(p.symbol.physical_values)))
    lip = lipschitz_block_bounds(p.symbol, p.cut).lipschitz_norm
    rows = np.empty((ensemble, len(ParaproductConstants._fields)))
    for member in range(ensemble):
        u = random_field(grid, rng, s=0.0, band=band, max_frequency=max_frequency)
        tu = apply(p, u)
        rows[member] = (
            sobolev_norm(tu, 0.0) / (sup_a * sobolev_norm(u, 0.0)),
            sobolev_norm(tu, 1.0) / (sup_a * sobolev_norm(u, 1.0)),
            sobolev_norm(u.multiply(p.symbol) - tu, 1.0) / (lip * u.norm()),
            max(adjoint_defect(p, u, j) for j in range(grid.dimension)) / (lip * u.norm()),
            block_commutator_norm(p, u) / (lip * sobolev_norm(u, 1.0)),
        )
    return rows


def fit_paraproduct_constants(
    p: Paraproduct,
    rng: np.random.Generator,
    ensemble: int = 100,
    band: bool = False,
    max_frequency: float | None = None,
    level: float = 1.0,
) -> ParaproductConstants:
    """Ensemble ``level``-quantiles of the paraproduct ratios; ``level=1`` is the ensemble maximum."""
    if not 0.0 < level <= 1.0:
        raise ConfigurationError(f"quantile level must lie in (0, 1], got {level}", f"bad_level:{level}")
    ratios = paraproduct_ratios(p, rng, ensemble, band, max_frequency)
    constants = ParaproductConstants(*map(float, np.quantile(ratios, level, axis=0)))
    _LOGGER.info("paraproduct constants (m=%d, n=%d, level=%g): %s", p.m, p.grid.points_per_axis, level, constants)
    return constants
