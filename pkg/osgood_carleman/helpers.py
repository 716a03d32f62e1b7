"""Shared helpers for the verification modules.

Small numeric utilities used by more than one suite: relative errors and
drifts, log-log fits, named random streams and Simpson quadrature in log space.
"""
from __future__ import annotations

import zlib
from typing import Any

import numpy as np
from scipy.integrate import simpson
from scipy.special import logsumexp

from .errors import ConfigurationError, FitFailure


def relative_error(measured: Any, reference: Any) -> float:
    """Max-norm relative error; absolute error when the reference vanishes."""
    measured = np.asarray(measured)
    reference = np.asarray(reference)
    scale = float(np.max(np.abs(reference), initial=0.0))
    diff = float(np.max(np.abs(measured - reference), initial=0.0))
    return diff / scale if scale > 0.0 else diff


def drift(first: float, second: float) -> float:
    """Relative change ``|second - first| / |first|`` between two fitted values."""
    if first == second:
        return 0.0
    if first == 0.0:
        return float("inf")
    return abs(second - first) / abs(first)


def fit_power_law(x: Any, y: Any) -> tuple[float, float]:
    """Least-squares fit of ``y ~ c * x**k`` on log-log data; returns (k, c)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2 or np.any(x <= 0) or np.any(y <= 0):
        raise FitFailure("power-law fit needs at least two positive samples", "bad_fit_data")
    slope, intercept = np.polyfit(np.log(x), np.log(y), 1)
    return float(slope), float(np.exp(intercept))


def make_rng(seed: int, stream: str) -> np.random.Generator:
    """Independent generator for ``stream``, derived from the global seed."""
    return np.random.default_rng([int(seed), zlib.crc32(stream.encode("utf-8"))])


# ---- quadrature


def simpson_weights(x: Any) -> np.ndarray:
    """Composite Simpson weights on the nodes ``x`` (odd number of nodes)."""
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < 3 or n % 2 == 0:
        raise ConfigurationError(f"Simpson needs an odd node count >= 3, got {n}", f"bad_nodes:{n}")
    steps = np.diff(x)
    if np.allclose(steps, steps[0], rtol=1e-13, atol=0.0):
        w = np.full(n, 2.0)
        w[1::2] = 4.0
        w[0] = w[-1] = 1.0
        return w * steps[0] / 3.0
    # Graded grids: let scipy build the weights column by column.
    return simpson(np.eye(n), x=x, axis=-1)


def log_simpson(log_values: Any, x: Any) -> float:
    """``log`` of the Simpson integral of ``exp(log_values)`` over ``x``.

    Returns ``-inf`` when every sample is zero. Negative weights on graded
    grids are allowed as long as the total stays positive.
    """
    log_values = np.asarray(log_values, dtype=float)
    if np.all(np.isneginf(log_values)):
        return float("-inf")
    value, sign = logsumexp(log_values, b=simpson_weights(x), return_sign=True)
    if sign <= 0:
        return float("-inf")
    return float(value)


def bump(s: Any, order: int = 0) -> np.ndarray:
    """``exp(-1/(1-s^2))`` on (-1, 1), zero outside, or its first or second derivative."""
    s = np.asarray(s, dtype=float)
    gap = 1.0 - s**2
    inside = gap > 0.0
    safe = np.where(inside, gap, 1.0)
    rho = np.where(inside, np.exp(-1.0 / safe), 0.0)
    if order == 0:
        return rho
    if order == 1:
        return rho * (-2.0 * s / safe**2)
    if order == 2:
        return rho * (6.0 * s**4 - 2.0) / safe**4
    raise ConfigurationError(f"unsupported derivative order {order}", f"bad_order:{order}")
