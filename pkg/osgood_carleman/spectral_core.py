"""Periodic-grid representation of functions of x in one or two dimensions.

Key facts:
  - The torus has side ``period`` (default 2*pi); wavenumbers are integer
    multiples of 2*pi/period, laid out in scipy.fft order.
  - Transforms use ``norm="ortho"``; the discrete L2 norm is
    ``sqrt(cell_volume * sum |u|^2)`` and equals the same sum over the
    frequency array, so Parseval holds up to rounding.
  - Derivatives zero the Nyquist index along the differentiated axis.
  - Every array handed out by a SpectralField is read-only.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Any, Callable

import numpy as np
from scipy import fft as sfft

from .errors import ConfigurationError

_LOGGER = logging.getLogger(__name__)

PHYSICAL = "physical"
FREQUENCY = "frequency"
FORWARD = "forward"
INVERSE = "inverse"


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class TorusGrid:
    """Uniform grid on the torus ``[-period/2, period/2)^dimension``."""

    dimension: int = 1
    points_per_axis: int = 1024
    period: float = 2.0 * math.pi

    def __post_init__(self) -> None:
        if self.dimension not in (1, 2):
            raise ConfigurationError(f"dimension must be 1 or 2, got {self.dimension}", f"bad_dimension:{self.dimension}")
        n = self.points_per_axis
        if n < 8 or n & (n - 1):
            raise ConfigurationError(f"points_per_axis must be a power of two >= 8, got {n}", f"bad_points:{n}")
        if not self.period > 0:
            raise ConfigurationError(f"period must be positive, got {self.period}", f"bad_period:{self.period}")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points_per_axis,) * self.dimension

    @property
    def axes(self) -> tuple[int, ...]:
        """Spatial axes counted from the end, for batched arrays."""
        return tuple(range(-self.dimension, 0))

    @property
    def spacing(self) -> float:
        return self.period / self.points_per_axis

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dimension

    @property
    def nyquist(self) -> float:
        """Largest resolved frequency, ``pi * n / period``."""
        return math.pi * self.points_per_axis / self.period

    @cached_property
    def axis_wavenumbers(self) -> np.ndarray:
        return _frozen(2.0 * math.pi * sfft.fftfreq(self.points_per_axis, d=self.spacing))

    @cached_property
    def wavenumbers(self) -> tuple[np.ndarray, ...]:
        """One broadcast-ready wavenumber array per axis."""
        grids = np.meshgrid(*([self.axis_wavenumbers] * self.dimension), indexing="ij")
        return tuple(_frozen(g) for g in grids)

    @cached_property
    def abs_wavenumber(self) -> np.ndarray:
        return _frozen(np.sqrt(sum(k**2 for k in self.wavenumbers)))

    @property
    def max_frequency(self) -> float:
        return float(self.abs_wavenumber.max())

    @cached_property
    def nyquist_mask(self) -> np.ndarray:
        """True on every frequency index sitting on a Nyquist line."""
        n = self.points_per_axis
        mask = np.zeros(self.shape, dtype=bool)
        for axis in range(self.dimension):
            index = [slice(None)] * self.dimension
            index[axis] = n // 2
            mask[tuple(index)] = True
        return _frozen(mask)

    @cached_property
    def axis_coordinates(self) -> np.ndarray:
        n = self.points_per_axis
        return _frozen(-0.5 * self.period + self.spacing * np.arange(n))

    @cached_property
    def coordinates(self) -> tuple[np.ndarray, ...]:
        grids = np.meshgrid(*([self.axis_coordinates] * self.dimension), indexing="ij")
        return tuple(_frozen(g) for g in grids)

    def refined(self) -> "TorusGrid":
        """Same torus with twice the points per axis."""
        return TorusGrid(self.dimension, 2 * self.points_per_axis, self.period)


# ---- batched array helpers (spatial axes are the trailing ones)


def forward_values(values: np.ndarray, grid: TorusGrid) -> np.ndarray:
    return sfft.fftn(values, axes=grid.axes, norm="ortho")


def inverse_values(values: np.ndarray, grid: TorusGrid) -> np.ndarray:
    return sfft.ifftn(values, axes=grid.axes, norm="ortho")


def apply_multiplier_values(values: np.ndarray, multiplier: np.ndarray, grid: TorusGrid) -> np.ndarray:
    """Physical-space values of ``multiplier(D)`` applied to physical ``values``."""
    return inverse_values(forward_values(values, grid) * multiplier, grid)


def derivative_multiplier(grid: TorusGrid, axis: int) -> np.ndarray:
    if not 0 <= axis < grid.dimension:
        raise ConfigurationError(f"axis {axis} out of range for dimension {grid.dimension}", f"bad_axis:{axis}")
    k = grid.wavenumbers[axis]
    index = [slice(None)] * grid.dimension
    index[axis] = grid.points_per_axis // 2
    mult = 1j * np.array(k)
    mult[tuple(index)] = 0.0
    return mult


def derivative_values(values: np.ndarray, grid: TorusGrid, axis: int) -> np.ndarray:
    return apply_multiplier_values(values, derivative_multiplier(grid, axis), grid)


def norm_values(values: np.ndarray, grid: TorusGrid) -> np.ndarray:
    """Discrete L2 norms over the trailing spatial axes."""
    return np.sqrt(grid.cell_volume * np.sum(np.abs(values) ** 2, axis=grid.axes))


def inner_values(first: np.ndarray, second: np.ndarray, grid: TorusGrid) -> np.ndarray:
    """``<first, second>`` over the trailing axes, conjugate-linear in ``second``."""
    return grid.cell_volume * np.sum(first * np.conj(second), axis=grid.axes)


# ---- fields


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Complex function on a TorusGrid, stored in one representation."""

    grid: TorusGrid
    values: np.ndarray
    representation: str = PHYSICAL

    def __post_init__(self) -> None:
        if self.representation not in (PHYSICAL, FREQUENCY):
            raise ConfigurationError(f"unknown representation {self.representation!r}", f"bad_repr:{self.representation}")
        values = np.array(self.values, dtype=complex)
        if values.shape != self.grid.shape:
            raise ConfigurationError(
                f"array shape {values.shape} does not match grid {self.grid.shape}", f"size_mismatch:{values.shape}"
            )
        object.__setattr__(self, "values", _frozen(values))

    @classmethod
    def from_function(cls, grid: TorusGrid, func: Callable[..., Any]) -> "SpectralField":
        """Sample ``func(x)`` (1D) or ``func(x1, x2)`` (2D) on the grid."""
        return cls(grid, np.broadcast_to(func(*grid.coordinates), grid.shape))

    @classmethod
    def zeros(cls, grid: TorusGrid) -> "SpectralField":
        return cls(grid, np.zeros(grid.shape))

    @cached_property
    def physical_values(self) -> np.ndarray:
        if self.representation == PHYSICAL:
            return self.values
        return _frozen(inverse_values(self.values, self.grid))

    @cached_property
    def frequency_values(self) -> np.ndarray:
        if self.representation == FREQUENCY:
            return self.values
        return _frozen(forward_values(self.values, self.grid))

    def is_real(self, tol: float = 1e-12) -> bool:
        u = self.physical_values
        scale = float(np.max(np.abs(u), initial=0.0))
        return float(np.max(np.abs(u.imag), initial=0.0)) <= tol * max(scale, 1.0)

    def norm(self) -> float:
        return float(norm_values(self.physical_values, self.grid))

    def inner(self, other: "SpectralField") -> complex:
        self._check_grid(other)
        return complex(inner_values(self.physical_values, other.physical_values, self.grid))

    def multiply(self, other: "SpectralField") -> "SpectralField":
        """Pointwise product in physical space."""
        self._check_grid(other)
        return SpectralField(self.grid, self.physical_values * other.physical_values)

    def apply_multiplier(self, multiplier: np.ndarray) -> "SpectralField":
        """Fourier multiplier given on the frequency array."""
        return SpectralField(self.grid, self.frequency_values * multiplier, FREQUENCY)

    def _check_grid(self, other: "SpectralField") -> None:
        if other.grid != self.grid:
            raise ConfigurationError("fields live on different grids", "grid_mismatch")

    def __add__(self, other: "SpectralField") -> "SpectralField":
        self._check_grid(other)
        return SpectralField(self.grid, self.physical_values + other.physical_values)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        self._check_grid(other)
        return SpectralField(self.grid, self.physical_values - other.physical_values)

    def __mul__(self, scalar: complex) -> "SpectralField":
        return SpectralField(self.grid, self.values * scalar, self.representation)

    __rmul__ = __mul__


def transform(field: SpectralField, direction: str) -> SpectralField:
    """Return the field stored in the other representation."""
    if direction == FORWARD:
        return SpectralField(field.grid, field.frequency_values, FREQUENCY)
    if direction == INVERSE:
        return SpectralField(field.grid, field.physical_values, PHYSICAL)
    raise ConfigurationError(f"unknown direction {direction!r}", f"bad_direction:{direction}")


def derivative(field: SpectralField, axis: int) -> SpectralField:
    """Spectral derivative along ``axis``; the Nyquist mode is dropped."""
    return field.apply_multiplier(derivative_multiplier(field.grid, axis))


def sobolev_norm(field: SpectralField, s: float) -> float:
    """``(cell_volume * sum (1+|xi|^2)^s |u_hat|^2)^(1/2)``."""
    weight = (1.0 + field.grid.abs_wavenumber**2) ** s
    return float(np.sqrt(field.grid.cell_volume * np.sum(weight * np.abs(field.frequency_values) ** 2)))


def _pad_axis(coefficients: np.ndarray, axis: int) -> np.ndarray:
    """Zero-pad one frequency axis to twice its length, splitting the Nyquist line evenly."""
    moved = np.moveaxis(coefficients, axis, 0)
    n = moved.shape[0]
    half = n // 2
    padded = np.zeros((2 * n,) + moved.shape[1:], dtype=complex)
    padded[:half] = moved[:half]
    padded[2 * n - half + 1 :] = moved[half + 1 :]
    padded[half] = padded[2 * n - half] = 0.5 * moved[half]
    return np.moveaxis(padded, 0, axis)


def refine(field: SpectralField) -> SpectralField:
    """Trigonometric interpolant of ``field`` on the refined grid; agrees with it on the coarse points."""
    coefficients = field.frequency_values
    for axis in field.grid.axes:
        coefficients = _pad_axis(coefficients, axis)
    scale = 2.0 ** (field.grid.dimension / 2.0)
    return SpectralField(field.grid.refined(), coefficients * scale, FREQUENCY)


def shell_index(abs_xi: np.ndarray) -> np.ndarray:
    """Dyadic shell of each frequency: 0 below 1, else ``floor(log2|xi|) + 1``."""
    shells = np.zeros(abs_xi.shape, dtype=int)
    high = abs_xi >= 1.0
    shells[high] = np.floor(np.log2(abs_xi[high])).astype(int) + 1
    return shells


def _band_mask(shells: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    present = np.unique(shells)
    keep = present[rng.random(present.size) < 0.5]
    if keep.size == 0:
        keep = present[rng.integers(present.size)]
    return np.isin(shells, keep)


def random_field(
    grid: TorusGrid,
    rng: np.random.Generator,
    s: float = 0.0,
    band: bool = False,
    max_frequency: float | None = None,
    real: bool = True,
) -> SpectralField:
    """Random field with complex Gaussian Fourier coefficients, unit H^s norm.

    With ``max_frequency`` the coefficients are drawn on the integer box
    ``|k_i| <= K`` (in units of 2*pi/period) independently of the grid, so the
    same generator state yields the same function on every grid that
    resolves it. ``band`` keeps a random subset of dyadic shells.
    """
    d = grid.dimension
    n = grid.points_per_axis
    unit = 2.0 * math.pi / grid.period
    if max_frequency is None:
        coeffs = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
        coeffs[grid.nyquist_mask] = 0.0
        abs_xi = grid.abs_wavenumber
    else:
        box = int(math.floor(max_frequency / unit))
        if 2 * box >= n:
            raise ConfigurationError(
                f"max_frequency {max_frequency} not resolved by {n} points", f"unresolved_band:{max_frequency}"
            )
        size = (2 * box + 1,) * d
        local = rng.standard_normal(size) + 1j * rng.standard_normal(size)
        ints = np.meshgrid(*([np.arange(-box, box + 1)] * d), indexing="ij")
        local_abs = unit * np.sqrt(sum(k**2 for k in ints))
        local[local_abs > max_frequency] = 0.0
        coeffs = np.zeros(grid.shape, dtype=complex)
        coeffs[tuple(k % n for k in ints)] = local
        abs_xi = grid.abs_wavenumber
    if band:
        support = np.abs(coeffs) > 0
        mask = _band_mask(shell_index(abs_xi[support]), rng)
        kept = np.zeros(grid.shape, dtype=bool)
        kept[support] = mask
        coeffs = np.where(kept, coeffs, 0.0)
    field = SpectralField(grid, coeffs, FREQUENCY)
    if real:
        field = SpectralField(grid, field.physical_values.real)
    size_s = sobolev_norm(field, s)
    if size_s == 0.0:
        _LOGGER.debug("random_field: empty draw, retrying")
        return random_field(grid, rng, s, band, max_frequency, real)
    return field * (1.0 / size_s)


# ---- JSON container


def dump_field(field: SpectralField, path: str | Path | None = None) -> dict[str, Any]:
    """Serialize to ``{grid: {dim, n, period}, values: [[re, im], ...]}``."""
    values = field.physical_values.reshape(-1)
    payload = {
        "grid": {"dim": field.grid.dimension, "n": field.grid.points_per_axis, "period": field.grid.period},
        "values": [[float(v.real), float(v.imag)] for v in values],
    }
    if path is not None:
        Path(path).write_text(json.dumps(payload), encoding="utf-8")
    return payload


def load_field(source: str | Path | dict[str, Any]) -> SpectralField:
    """Inverse of :func:`dump_field`; accepts a path or an already parsed dict."""
    payload = source if isinstance(source, dict) else json.loads(Path(source).read_text(encoding="utf-8"))
    try:
        spec = payload["grid"]
        grid = TorusGrid(int(spec["dim"]), int(spec["n"]), float(spec["period"]))
        pairs = np.asarray(payload["values"], dtype=float)
    except (KeyError, TypeError, ValueError) as err:
        raise ConfigurationError(f"malformed field container: {err}", "bad_field_json") from err
    if pairs.ndim != 2 or pairs.shape != (grid.points_per_axis**grid.dimension, 2):
        raise ConfigurationError("field container size does not match its grid", "size_mismatch")
    return SpectralField(grid, (pairs[:, 0] + 1j * pairs[:, 1]).reshape(grid.shape))


@dataclass(frozen=True, eq=False)
class SpaceTimeField:
    """Time samples of one field on a common grid, with optional exact d/dt."""

    grid: TorusGrid
    times: np.ndarray
    values: np.ndarray
    time_derivative: np.ndarray | None = None

    def __post_init__(self) -> None:
        times = np.array(self.times, dtype=float)
        if times.ndim != 1 or times.size < 2 or np.any(np.diff(times) <= 0):
            raise ConfigurationError("time grid must be strictly increasing", "bad_time_grid")
        values = np.array(self.values, dtype=complex)
        expected = (times.size, *self.grid.shape)
        if values.shape != expected:
            raise ConfigurationError(f"values shape {values.shape} != {expected}", "size_mismatch")
        object.__setattr__(self, "times", _frozen(times))
        object.__setattr__(self, "values", _frozen(values))
        if self.time_derivative is not None:
            dt = np.array(self.time_derivative, dtype=complex)
            if dt.shape != expected:
                raise ConfigurationError("time derivative shape mismatch", "size_mismatch")
            object.__setattr__(self, "time_derivative", _frozen(dt))

    def slice(self, index: int) -> SpectralField:
        return SpectralField(self.grid, self.values[index])

    @cached_property
    def dt_values(self) -> np.ndarray:
        """Exact derivative when provided, else second-order differences."""
        if self.time_derivative is not None:
            return self.time_derivative
        return _frozen(np.gradient(self.values, self.times, axis=0, edge_order=2))

    def norms(self) -> np.ndarray:
        return norm_values(self.values, self.grid)
