"""Explicit non-uniqueness example for a parabolic operator with an oscillating coefficient.

Key facts:
  - Intervals ``[a_n, a_{n+1}]`` accumulate at ``t = 0`` from the left with
    ``a_n = -exp(-sqrt(log(n + j0)))`` and frequencies ``z_n = (n + j0)^3``.
  - On interval n, with ``s = (t - a_n) / r_n``:
    ``u = A(s) v_n + B(s) w_n + C(s) v_{n+1}``,
    ``v_n = exp(-q_n - z_n (t - a_n)) cos(sqrt(z_n) x1)`` and
    ``w_n = v_n-scale * exp(J(s) p_n) cos(sqrt(z_n) x2)``.
  - Every value is a pair ``(log_scale, mantissa)``; lower-order
    coefficients and residuals only ever see mantissas.
  - Native data vanish for ``t >= 0`` and solve
    ``(d_t - d_x1^2 - l d_x2^2 + b1 d_x1 + b2 d_x2 + c) u = 0``;
    ``flip_time`` gives the forward orientation
    ``(d_t + d_x1^2 + l d_x2^2 + ...) u = 0`` with support ``t >= 0``.
  - Arrays are 0-based: entry ``i`` holds the quantity with index ``n = i + 1``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Any, NamedTuple

import numpy as np

from .const import CHOOSE_J0_CAP, COND3_ALPHAS, OSC_EPSILONS, WITNESS_EXPONENTS
from .errors import ConditionViolation, ConfigurationError, DomainError, SearchFailure
from .helpers import drift, fit_power_law
from .littlewood_paley import smooth_step

_LOGGER = logging.getLogger(__name__)

NATIVE = "native"
FORWARD = "forward"

BRANCH_HEAD = "head"
BRANCH_INTERVAL = "interval"
BRANCH_ZERO = "zero"
BRANCH_TAIL = "tail"

FLAG_OK = "ok"
FLAG_ZERO = "zero_branch"
FLAG_TAIL = "tail"
FLAG_DEGENERATE = "degenerate"

RESIDUAL_TOL = 1e-10
DECAY_FACTOR = 1e-6
OSC_DRIFT_LIMIT = 1.05


# ---- bump profiles


def _step(s: np.ndarray, start: float, width: float, order: int) -> np.ndarray:
    """``S((s - start) / width)`` or its s-derivative of the given order."""
    return smooth_step((s - start) / width, order) / width**order


@dataclass(frozen=True)
class BumpProfiles:
    """Cut-offs A, B, C and the switch J on the unit interval of each block."""

    def A(self, s: Any, order: int = 0) -> np.ndarray:  # noqa: N802
        s = np.asarray(s, dtype=float)
        value = -_step(s, 0.2, 0.05, order)
        return 1.0 + value if order == 0 else value

    def B(self, s: Any, order: int = 0) -> np.ndarray:  # noqa: N802
        s = np.asarray(s, dtype=float)
        rise, fall = _step(s, 0.0, 1.0 / 6.0, 0), 1.0 - _step(s, 0.5, 0.5, 0)
        if order == 0:
            return rise * fall
        if order == 1:
            return _step(s, 0.0, 1.0 / 6.0, 1) * fall - rise * _step(s, 0.5, 0.5, 1)
        if order == 2:
            return (
                _step(s, 0.0, 1.0 / 6.0, 2) * fall
                - 2.0 * _step(s, 0.0, 1.0 / 6.0, 1) * _step(s, 0.5, 0.5, 1)
                - rise * _step(s, 0.5, 0.5, 2)
            )
        raise ConfigurationError(f"unsupported derivative order {order}", f"bad_order:{order}")

    def C(self, s: Any, order: int = 0) -> np.ndarray:  # noqa: N802
        return _step(np.asarray(s, dtype=float), 0.25, 1.0 / 12.0, order)

    def J(self, s: Any, order: int = 0) -> np.ndarray:  # noqa: N802
        s = np.asarray(s, dtype=float)
        value = 4.0 * _step(s, 1.0 / 6.0, 1.0 / 30.0, order) - 4.0 * _step(s, 1.0 / 3.0, 1.0 / 6.0, order)
        return value - 2.0 if order == 0 else value

    @cached_property
    def _step_sups(self) -> tuple[float, float]:
        first = float(np.max(smooth_step(np.linspace(0.0, 1.0, 20_001), 1)))
        second = float(np.max(np.abs(smooth_step(np.linspace(0.0, 1.0, 200_001), 2)))) * (1.0 + 1e-8)
        return first, second

    @property
    def j_prime_sup(self) -> float:
        """``||J'||_inf``; the two transitions have disjoint supports."""
        return 4.0 * self._step_sups[0] * 30.0

    @property
    def j_second_sup(self) -> float:
        return 4.0 * self._step_sups[1] * 30.0**2

    @cached_property
    def derivative_scale(self) -> float:
        """``max_{l <= 4} sup |bump^(l)|^(1/l)`` over A, B, C, J on a fine grid."""
        s = np.linspace(-0.05, 1.05, 110_001)
        h = s[1] - s[0]
        scale = 0.0
        for profile in (self.A, self.B, self.C, self.J):
            second = profile(s, 2)
            sups = [
                float(np.max(np.abs(profile(s, 1)))),
                float(np.max(np.abs(second))),
                float(np.max(np.abs(np.diff(second)))) / h,
                float(np.max(np.abs(np.diff(second, n=2)))) / h**2,
            ]
            scale = max(scale, *(sup ** (1.0 / order) for order, sup in enumerate(sups, start=1)))
        return scale * (1.0 + 1e-3)


# ---- sequences


class GrowthCertificate(NamedTuple):
    lambda_q: float  # min q_n / m^(7/4) over n in [N/2, N]
    lambda_p: float  # max p_n / m^(5/4)
    q_exponent: float
    p_exponent: float


@dataclass(frozen=True, eq=False)
class SequenceFamily:
    j0: int
    N: int
    a: np.ndarray  # a_1 .. a_{N+1}
    z: np.ndarray  # z_1 .. z_{N+1}
    r: np.ndarray  # r_1 .. r_N
    q: np.ndarray  # q_1 .. q_{N+1}
    p: np.ndarray  # p_1 .. p_N
    growth: GrowthCertificate

    @property
    def m(self) -> np.ndarray:
        """``n + j0`` for n = 1..N+1."""
        return np.arange(1, self.N + 2, dtype=float) + self.j0

    def cond2_ratio(self) -> np.ndarray:
        """``p_n / (r_n z_n)``."""
        return self.p / (self.r * self.z[:-1])


def _growth(j0: int, N: int, q: np.ndarray, p: np.ndarray) -> GrowthCertificate:
    lower = max(2, N // 2)
    n = np.arange(lower, N + 1)
    if n.size < 2:
        nan = float("nan")
        return GrowthCertificate(nan, nan, nan, nan)
    m = n + float(j0)
    q_tail, p_tail = q[n - 1], p[n - 1]
    q_exp, _ = fit_power_law(m, q_tail)
    p_exp, _ = fit_power_law(m, p_tail)
    return GrowthCertificate(float(np.min(q_tail / m**1.75)), float(np.max(p_tail / m**1.25)), q_exp, p_exp)


def build_sequences(j0: int, N: int) -> SequenceFamily:
    """``a, z, r, q, p`` for n up to N (N + 1 where the next block is needed)."""
    if j0 < 2:
        raise DomainError(f"j0 must be >= 2, got {j0}", f"invalid_j0:{j0}")
    if N < 2:
        raise DomainError(f"need at least 2 intervals, got {N}", f"bad_N:{N}")
    m = np.arange(1, N + 2, dtype=float) + j0
    a = -np.exp(-np.sqrt(np.log(m)))
    z = m**3
    head = m[:-1]
    gap = np.log1p(1.0 / head) / (np.sqrt(np.log(head + 1.0)) + np.sqrt(np.log(head)))
    r = np.exp(-np.sqrt(np.log(head))) * -np.expm1(-gap)
    q = np.concatenate(([0.0], np.cumsum(z[1:] * r)))
    p = (3.0 * head**2 + 3.0 * head + 1.0) * r

    if not (np.all(np.diff(a) > 0.0) and a[0] > -1.0 and a[-1] < 0.0):
        raise DomainError("a_n is not increasing inside (-1, 0)", "seq_a")
    if not (np.all(np.diff(z) > 0.0) and z[0] > 1.0):
        raise DomainError("z_n is not increasing above 1", "seq_z")
    bad = np.flatnonzero(p <= 1.0)
    if bad.size:
        n = int(bad[0]) + 1
        raise DomainError(f"p_n <= 1 at n={n} for j0={j0}", f"invalid_j0:n={n}")
    family = SequenceFamily(j0, N, a, z, r, q, p, _growth(j0, N, q, p))
    _LOGGER.debug("sequences j0=%d N=%d: %s", j0, N, family.growth)
    return family


# ---- witnesses


def cond1_witness(seq: SequenceFamily, exponents: tuple[float, float, float]) -> np.ndarray:
    """``log(exp(-q_n + 2 p_n) z_{n+1}^a p_n^b r_n^-g)`` for n = 1..N."""
    a, b, g = exponents
    return -seq.q[:-1] + 2.0 * seq.p + a * np.log(seq.z[1:]) + b * np.log(seq.p) - g * np.log(seq.r)


def cond4_witness(seq: SequenceFamily, exponents: tuple[float, float, float]) -> np.ndarray:
    """``log(exp(-p_n) z_{n+1}^a p_n^b r_n^-g)`` for n = 1..N."""
    a, b, g = exponents
    return -seq.p + a * np.log(seq.z[1:]) + b * np.log(seq.p) - g * np.log(seq.r)


def _decays_after_peak(log_witness: np.ndarray) -> bool:
    peak = int(np.argmax(log_witness))
    return bool(np.all(np.diff(log_witness[peak:]) <= 0.0))


def _witness_grid() -> list[tuple[float, float, float]]:
    return [(a, b, g) for a in WITNESS_EXPONENTS for b in WITNESS_EXPONENTS for g in WITNESS_EXPONENTS]


def choose_j0(N: int, bumps: BumpProfiles | None = None, cap: int = CHOOSE_J0_CAP) -> int:
    """Smallest j0 meeting p_n > 1, the cond2 bound and monotone witness decay for n <= N.

    The scan starts at the first j0 allowed by ``3 / (1 + j0) < 1 / (2 ||J'||)``,
    since ``p_n / (r_n z_n) > 3 / (n + j0)`` rules out every smaller value.
    """
    if N < 100:
        raise ConfigurationError(f"choose_j0 needs N >= 100, got {N}", f"bad_N:{N}")
    bumps = bumps or BumpProfiles()
    bound = 1.0 / (2.0 * bumps.j_prime_sup)
    grid = _witness_grid()
    j0 = max(2, math.floor(6.0 * bumps.j_prime_sup - 1.0) + 1)
    while j0 <= cap:
        try:
            seq = build_sequences(j0, N)
        except DomainError:
            j0 += 1
            continue
        if float(np.max(seq.cond2_ratio())) <= bound and all(
            _decays_after_peak(cond1_witness(seq, e)) and _decays_after_peak(cond4_witness(seq, e)) for e in grid
        ):
            _LOGGER.info("choose_j0(N=%d) = %d", N, j0)
            return j0
        j0 += 1
    raise SearchFailure(f"no j0 <= {cap} satisfies the side conditions for N={N}", "no_admissible_j0")


# ---- data and evaluation


@dataclass(frozen=True, eq=False)
class CounterexampleData:
    seq: SequenceFamily
    bumps: BumpProfiles = BumpProfiles()
    orientation: str = NATIVE
    l_sign: int = -1

    def __post_init__(self) -> None:
        if self.orientation not in (NATIVE, FORWARD):
            raise ConfigurationError(f"unknown orientation {self.orientation!r}", f"bad_orientation:{self.orientation}")
        if self.l_sign not in (-1, 1):
            raise ConfigurationError(f"l_sign must be +1 or -1, got {self.l_sign}", f"bad_l_sign:{self.l_sign}")


def build_counterexample(j0: int | None = None, N: int = 10_000, l_sign: int = -1) -> CounterexampleData:
    bumps = BumpProfiles()
    j0 = choose_j0(max(N, 100), bumps) if j0 is None else j0
    return CounterexampleData(build_sequences(j0, N), bumps, NATIVE, l_sign)


def flip_time(data: CounterexampleData) -> CounterexampleData:
    """Exchange t with -t; applying it twice returns the original orientation."""
    return replace(data, orientation=FORWARD if data.orientation == NATIVE else NATIVE)


class SolutionSample(NamedTuple):
    """``u = exp(log_scale) * u_mantissa`` and the same for every derivative."""

    log_scale: np.ndarray
    u: np.ndarray
    ut: np.ndarray
    ux1: np.ndarray
    ux2: np.ndarray
    uxx1: np.ndarray
    uxx2: np.ndarray
    branch: np.ndarray

    def as_tuple(self, physical: bool = True) -> tuple[np.ndarray, ...]:
        """``(u, d_t u, d_x1 u, d_x2 u, d_x1^2 u, d_x2^2 u)``; plain floats with ``physical``."""
        values = (self.u, self.ut, self.ux1, self.ux2, self.uxx1, self.uxx2)
        if not physical:
            return values
        with np.errstate(over="ignore", invalid="ignore"):
            scale = np.exp(self.log_scale)
            return tuple(np.where(v == 0.0, 0.0, scale * v) for v in values)


def _shifted(value: np.ndarray, shift: np.ndarray) -> np.ndarray:
    """``value * exp(shift)`` without forming ``exp(shift)``."""
    nonzero = value != 0.0
    safe = np.where(nonzero, np.abs(value), 1.0)
    return np.where(nonzero, np.sign(value) * np.exp(np.log(safe) + shift), 0.0)


def _interval_base(seq: SequenceFamily, index: np.ndarray, s: np.ndarray) -> np.ndarray:
    """``-q_n - z_{n+1} r_n s``, the log scale of v_{n+1} on interval n.

    Written as an interpolation between ``-q_n`` and ``-q_{n+1}`` so both ends are exact.
    """
    return -(seq.q[index] * (1.0 - s) + seq.q[index + 1] * s)


def _piece_offsets(data: CounterexampleData, index: np.ndarray, s: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Log offsets of v_n, w_n and v_{n+1} on interval n relative to ``_interval_base``."""
    p = data.seq.p[index]
    ps = p * s
    return ps, data.bumps.J(s) * p + ps, np.zeros_like(ps)


def _interval_sample(data: CounterexampleData, index: np.ndarray, s: np.ndarray, x1: np.ndarray, x2: np.ndarray) -> SolutionSample:
    """Native-orientation sample on interval ``index`` (0-based) at local coordinate s."""
    seq, bumps = data.seq, data.bumps
    z0, z1, r, p = seq.z[index], seq.z[index + 1], seq.r[index], seq.p[index]
    A, B, C = bumps.A(s), bumps.B(s), bumps.C(s)
    dJ = bumps.J(s, 1)
    offsets = _piece_offsets(data, index, s)
    with np.errstate(divide="ignore"):
        logs = [np.log(A) + offsets[0], np.log(B) + offsets[1], np.log(C) + offsets[2]]
    kappa = np.maximum.reduce(logs)
    a_ = _shifted(A, offsets[0] - kappa)
    b_ = _shifted(B, offsets[1] - kappa)
    c_ = _shifted(C, offsets[2] - kappa)
    da = _shifted(bumps.A(s, 1), offsets[0] - kappa) / r
    db = _shifted(bumps.B(s, 1), offsets[1] - kappa) / r
    dc = _shifted(bumps.C(s, 1), offsets[2] - kappa) / r
    k0, k1 = np.sqrt(z0), np.sqrt(z1)
    c1, s1 = np.cos(k0 * x1), np.sin(k0 * x1)
    c2, s2 = np.cos(k0 * x2), np.sin(k0 * x2)
    c3, s3 = np.cos(k1 * x1), np.sin(k1 * x1)
    u = a_ * c1 + b_ * c2 + c_ * c3
    ut = (da - z0 * a_) * c1 + (db + b_ * (dJ * p / r - z0)) * c2 + (dc - z1 * c_) * c3
    ux1 = -k0 * a_ * s1 - k1 * c_ * s3
    ux2 = -k0 * b_ * s2
    uxx1 = -z0 * a_ * c1 - z1 * c_ * c3
    uxx2 = -z0 * b_ * c2
    log_scale = _interval_base(seq, index, s) + kappa
    branch = np.full(np.shape(u), BRANCH_INTERVAL, dtype=object)
    return SolutionSample(log_scale, u, ut, ux1, ux2, uxx1, uxx2, branch)


def _native_sample(data: CounterexampleData, t: np.ndarray, x1: np.ndarray, x2: np.ndarray) -> SolutionSample:
    seq = data.seq
    t, x1, x2 = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(x1, dtype=float), np.asarray(x2, dtype=float))
    index = np.searchsorted(seq.a, t, side="right") - 1
    head = index < 0
    inside = (index >= 0) & (index < seq.N)
    zero = t >= 0.0
    tail = ~head & ~inside & ~zero
    safe = np.clip(index, 0, seq.N - 1)
    s = np.where(inside, (t - seq.a[safe]) / seq.r[safe], 0.0)
    sample = _interval_sample(data, safe, s, x1, x2)

    z1, k1 = seq.z[0], math.sqrt(seq.z[0])
    head_cos, head_sin = np.cos(k1 * x1), np.sin(k1 * x1)
    head_values = {
        "log_scale": -z1 * (t - seq.a[0]),
        "u": head_cos,
        "ut": -z1 * head_cos,
        "ux1": -k1 * head_sin,
        "ux2": np.zeros_like(t),
        "uxx1": -z1 * head_cos,
        "uxx2": np.zeros_like(t),
    }
    out = {}
    off = ~inside & ~head
    for name, head_value in head_values.items():
        value = np.where(head, head_value, getattr(sample, name))
        out[name] = np.where(off, -np.inf if name == "log_scale" else 0.0, value)
    branch = np.where(head, BRANCH_HEAD, np.where(inside, BRANCH_INTERVAL, np.where(tail, BRANCH_TAIL, BRANCH_ZERO)))
    return SolutionSample(branch=branch.astype(object), **out)


def eval_solution(data: CounterexampleData, t: Any, x1: Any, x2: Any) -> SolutionSample:
    """``u`` and its derivatives in the orientation of ``data``; inputs broadcast."""
    t = np.asarray(t, dtype=float)
    if data.orientation == NATIVE:
        return _native_sample(data, t, x1, x2)
    sample = _native_sample(data, -t, x1, x2)
    return sample._replace(ut=-sample.ut)


def eval_v(data: CounterexampleData, n: int, t: Any, x1: Any) -> tuple[np.ndarray, np.ndarray]:
    """``v_n`` (n is 1-based) as ``(log_scale, mantissa)`` in the native orientation.

    On interval n and on interval n-1 the log scale is taken from the same interval base as
    ``eval_solution``, so it agrees with the solution bit for bit wherever v_n is the only piece.
    """
    seq = data.seq
    i = n - 1
    if not 0 <= i <= seq.N:
        raise DomainError(f"v_n is only defined for 1 <= n <= N+1, got {n}", f"bad_interval:{n}")
    t = np.asarray(t, dtype=float)
    index = np.searchsorted(seq.a, t, side="right") - 1
    safe = np.clip(index, 0, seq.N - 1)
    s = (t - seq.a[safe]) / seq.r[safe]
    base = _interval_base(seq, safe, s)
    own = (index == i) & (i < seq.N)
    previous = index == i - 1
    linear = -seq.q[i] - seq.z[i] * (t - seq.a[i])
    log_scale = np.where(own, base + _piece_offsets(data, safe, s)[0], np.where(previous, base, linear))
    return log_scale, np.cos(math.sqrt(seq.z[i]) * np.asarray(x1, dtype=float))


def eval_w(data: CounterexampleData, n: int, t: Any, x2: Any) -> tuple[np.ndarray, np.ndarray]:
    """``w_n`` as ``(log_scale, mantissa)``; only defined on interval n."""
    seq = data.seq
    i = n - 1
    if not 0 <= i < seq.N:
        raise DomainError(f"w_n is only defined for 1 <= n <= N, got {n}", f"bad_interval:{n}")
    s = (np.asarray(t, dtype=float) - seq.a[i]) / seq.r[i]
    index = np.full(s.shape, i)
    log_scale = _interval_base(seq, index, s) + _piece_offsets(data, index, s)[1]
    return log_scale, np.cos(math.sqrt(seq.z[i]) * np.asarray(x2, dtype=float))


def _native_l(data: CounterexampleData, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    seq = data.seq
    t = np.asarray(t, dtype=float)
    index = np.searchsorted(seq.a, t, side="right") - 1
    inside = (index >= 0) & (index < seq.N)
    safe = np.clip(index, 0, seq.N - 1)
    r, p, z = seq.r[safe], seq.p[safe], seq.z[safe]
    s = np.where(inside, (t - seq.a[safe]) / r, 0.0)
    sign = float(data.l_sign)
    l_value = np.where(inside, 1.0 + sign * data.bumps.J(s, 1) * p / (r * z), 1.0)
    l_prime = np.where(inside, sign * data.bumps.J(s, 2) * p / (r**2 * z), 0.0)
    return l_value, l_prime


def eval_l(data: CounterexampleData, t: Any) -> tuple[np.ndarray, np.ndarray]:
    """``(l(t), l'(t))``; l = 1 away from the realized intervals."""
    t = np.asarray(t, dtype=float)
    if data.orientation == NATIVE:
        return _native_l(data, t)
    value, prime = _native_l(data, -t)
    return value, -prime


class LowerOrder(NamedTuple):
    b1: np.ndarray
    b2: np.ndarray
    c: np.ndarray
    flag: np.ndarray
    residual: np.ndarray  # mantissa units


def _operator_mantissa(data: CounterexampleData, sample: SolutionSample, l_value: np.ndarray) -> np.ndarray:
    if data.orientation == NATIVE:
        return sample.ut - sample.uxx1 - l_value * sample.uxx2
    return sample.ut + sample.uxx1 + l_value * sample.uxx2


def eval_lower_order(data: CounterexampleData, t: Any, x1: Any, x2: Any) -> LowerOrder:
    """``b1, b2, c = -Lu (d_x1 u, d_x2 u, u) / (u^2 + |grad u|^2)`` with the residual identity checked."""
    sample = eval_solution(data, t, x1, x2)
    l_value, _ = eval_l(data, np.broadcast_to(np.asarray(t, dtype=float), sample.u.shape))
    lu = _operator_mantissa(data, sample, l_value)
    den = sample.u**2 + sample.ux1**2 + sample.ux2**2
    live = np.isin(sample.branch, (BRANCH_HEAD, BRANCH_INTERVAL))
    usable = live & (den > 0.0) & np.isfinite(den)
    safe = np.where(usable, den, 1.0)
    factor = np.where(usable, -lu / safe, 0.0)
    b1, b2, c = factor * sample.ux1, factor * sample.ux2, factor * sample.u
    residual = np.where(usable, lu + b1 * sample.ux1 + b2 * sample.ux2 + c * sample.u, 0.0)
    flag = np.where(
        usable,
        FLAG_OK,
        np.where(sample.branch == BRANCH_TAIL, FLAG_TAIL, np.where(live, FLAG_DEGENERATE, FLAG_ZERO)),
    ).astype(object)
    degenerate = int(np.count_nonzero(flag == FLAG_DEGENERATE))
    if degenerate:
        _LOGGER.warning("%d sample points with u^2 + |grad u|^2 = 0 inside the support", degenerate)
    worst = np.abs(residual) - RESIDUAL_TOL * (np.abs(lu) + 1.0)
    if np.any(worst[usable] > 0.0):
        raise ConditionViolation("construction identity for b1, b2, c failed", "residual_identity")
    return LowerOrder(b1, b2, c, flag, residual)


def _junction_gaps(data: CounterexampleData, n: np.ndarray, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
    seq = data.seq
    n = n[:, None]
    x1, x2 = np.broadcast_arrays(np.asarray(x1, dtype=float)[None, :], np.asarray(x2, dtype=float)[None, :])
    shape = np.broadcast_shapes(n.shape, x1.shape)
    left = _interval_sample(data, np.broadcast_to(n - 1, shape), np.ones(shape), x1, x2)
    right = _interval_sample(data, np.broadcast_to(n, shape), np.zeros(shape), x1, x2)
    top = np.maximum(left.log_scale, right.log_scale)
    worst = np.zeros(n.shape[0])
    for name in ("u", "ut", "ux1", "ux2"):
        lhs = getattr(left, name) * np.exp(left.log_scale - top)
        rhs = getattr(right, name) * np.exp(right.log_scale - top)
        floor = 1.0 if name == "u" else np.sqrt(seq.z[n[:, 0]])
        scale = np.maximum(np.max(np.abs(rhs), axis=1), floor)
        worst = np.maximum(worst, np.max(np.abs(lhs - rhs), axis=1) / scale)
    return worst


def junction_mismatch(data: CounterexampleData, n: int, x1: Any, x2: Any) -> float:
    """Relative gap at ``t = a_{n+1}`` between interval n (s = 1) and interval n+1 (s = 0)."""
    if not 1 <= n < data.seq.N:
        raise DomainError(f"junction index must lie in [1, N-1], got {n}", f"bad_interval:{n}")
    return float(_junction_gaps(data, np.array([n]), np.ravel(x1), np.ravel(x2))[0])


def junction_profile(data: CounterexampleData, x1: Any, x2: Any, chunk: int = 512) -> np.ndarray:
    """``junction_mismatch`` for every n = 1..N-1, evaluated in chunks of junctions."""
    x1, x2 = (np.ravel(v) for v in np.broadcast_arrays(np.asarray(x1, dtype=float), np.asarray(x2, dtype=float)))
    junctions = np.arange(1, data.seq.N)
    gaps = [_junction_gaps(data, junctions[k : k + chunk], x1, x2) for k in range(0, junctions.size, chunk)]
    return np.concatenate(gaps) if gaps else np.zeros(0)


def holder_quotient(data: CounterexampleData, alpha: float, samples: int = 600) -> float:
    """``sup |l(t1) - l(t2)| / |t1 - t2|^alpha`` over pairs on the realized side of 0."""
    seq = data.seq
    side = 1.0 if data.orientation == FORWARD else -1.0
    points = side * np.concatenate(([0.0], np.geomspace(abs(seq.a[-1]), abs(seq.a[0]), samples)))
    values, _ = eval_l(data, points)
    i, j = np.triu_indices(points.size, k=1)
    gaps = np.abs(points[i] - points[j])
    return float(np.max(np.abs(values[i] - values[j]) / gaps**alpha))


def eval_grid(data: CounterexampleData, times: Any, x1: Any, x2: Any) -> list[dict[str, float]]:
    """Rows ``t, x1, x2, u, l, b1, b2, c`` on the product grid; u is a plain float."""
    tt, xx1, xx2 = np.meshgrid(np.asarray(times, float), np.asarray(x1, float), np.asarray(x2, float), indexing="ij")
    tt, xx1, xx2 = tt.reshape(-1), xx1.reshape(-1), xx2.reshape(-1)
    u = eval_solution(data, tt, xx1, xx2).as_tuple()[0]
    l_value, _ = eval_l(data, tt)
    lower = eval_lower_order(data, tt, xx1, xx2)
    columns = (tt, xx1, xx2, u, l_value, lower.b1, lower.b2, lower.c)
    names = ("t", "x1", "x2", "u", "l", "b1", "b2", "c")
    return [dict(zip(names, map(float, row))) for row in zip(*columns)]


# ---- side conditions


class ConditionsReport(NamedTuple):
    checks: dict[str, bool]
    values: dict[str, float]
    tables: dict[str, Any]


def _interval_points(seq: SequenceFamily, per_interval: int) -> tuple[np.ndarray, np.ndarray]:
    """Native times at ``per_interval`` points of every interval, and their interval index."""
    s = np.linspace(0.0, 1.0, per_interval)
    t = seq.a[:-1, None] + seq.r[:, None] * s[None, :]
    index = np.broadcast_to(np.arange(seq.N)[:, None], t.shape)
    return t, index


def osc_supremum(data: CounterexampleData, per_interval: int = 100) -> float:
    """``max_n max_t |t| / (1 + |log|t||) * |l'(t)|`` on the sampled intervals."""
    t, _ = _interval_points(data.seq, per_interval)
    _, l_prime = _native_l(data, t.reshape(-1))
    weight = np.abs(t.reshape(-1)) / (1.0 + np.abs(np.log(np.abs(t.reshape(-1)))))
    return float(np.max(weight * np.abs(l_prime)))


def decay_certificate(seq: SequenceFamily, bumps: BumpProfiles, k: int, power: int) -> int | None:
    """First n from which ``sup_x |d^k u| <= |t|^power`` holds on every later interval.

    The bound on interval n is ``3 (k+1)! exp(-q_n + 2 p_n) G_n^k`` with
    ``G_n = z_{n+1} + (1 + 2 p_n) D / r_n`` and D the bump derivative scale;
    ``|t| >= |a_{n+1}|`` there.
    """
    growth = seq.z[1:] + (1.0 + 2.0 * seq.p) * bumps.derivative_scale / seq.r
    log_bound = math.log(3.0 * math.factorial(k + 1)) - seq.q[:-1] + 2.0 * seq.p + k * np.log(growth)
    target = power * np.log(np.abs(seq.a[1:]))
    fails = np.flatnonzero(log_bound > target)
    if fails.size == 0:
        return 1
    first = int(fails[-1]) + 2
    return first if first <= seq.N else None


def vanishes_from_half(seq: SequenceFamily, bumps: BumpProfiles) -> tuple[bool, int | None]:
    """Whether ``sup_x |u(t)| <= |t|^5`` is certified for every |t| <= |a_{N//2}|, with the certificate."""
    n_cert = decay_certificate(seq, bumps, 0, 5)
    return n_cert is not None and n_cert <= seq.N // 2, n_cert


def verify_conditions(data: CounterexampleData, per_interval: int = 100) -> ConditionsReport:
    """Side conditions on the realized family and on its doubled version (for drifts).

    Witness decay is asserted on the doubled family; a failure raises
    ConditionViolation carrying the witness table.
    """
    seq, bumps = data.seq, data.bumps
    if seq.N < 1000:
        raise ConfigurationError(f"verify_conditions needs N >= 1000, got {seq.N}", f"bad_N:{seq.N}")
    doubled = build_sequences(seq.j0, 2 * seq.N)
    double_data = replace(data, seq=doubled)
    checks: dict[str, bool] = {}
    values: dict[str, float] = {}
    tables: dict[str, Any] = {}

    floor = math.log(DECAY_FACTOR)
    witness_rows = []
    for name, witness in (("cond1", cond1_witness), ("cond4", cond4_witness)):
        for exps in _witness_grid():
            series = witness(doubled, exps)
            peak = float(np.max(series))
            ok = _decays_after_peak(series) and float(series[-1]) <= peak + floor
            witness_rows.append({"condition": name, "exponents": list(exps), "log_peak": peak, "log_last": float(series[-1]), "passed": ok})
    tables["witnesses"] = witness_rows
    failed = [row for row in witness_rows if not row["passed"]]
    if failed:
        raise ConditionViolation(
            f"{len(failed)} witness sequences do not decay below {DECAY_FACTOR:g} of their peak",
            f"witness_decay:{failed[0]['condition']}",
            table=witness_rows,
        )
    checks["cond1_decay"] = checks["cond4_decay"] = True

    bound = 1.0 / (2.0 * bumps.j_prime_sup)
    sup2, sup2_doubled = float(np.max(seq.cond2_ratio())), float(np.max(doubled.cond2_ratio()))
    values["cond2_sup"], values["cond2_bound"] = sup2, bound
    values["cond2_drift"] = drift(sup2, sup2_doubled)
    checks["cond2"] = sup2 <= bound and values["cond2_drift"] < 0.05
    for alpha in COND3_ALPHAS:
        first = float(np.max(seq.p * seq.r ** (-1.0 - alpha) / seq.z[:-1]))
        second = float(np.max(doubled.p * doubled.r ** (-1.0 - alpha) / doubled.z[:-1]))
        values[f"cond3_sup[{alpha:g}]"] = first
        values[f"cond3_drift[{alpha:g}]"] = drift(first, second)
        checks[f"cond3[{alpha:g}]"] = math.isfinite(first) and drift(first, second) < 0.05

    s_n, s_2n = osc_supremum(data, per_interval), osc_supremum(double_data, per_interval)
    values["osc1_S_N"], values["osc1_S_2N"] = s_n, s_2n
    checks["osc1"] = s_2n / s_n <= OSC_DRIFT_LIMIT
    t, _ = _interval_points(seq, per_interval)
    t = t.reshape(-1)
    l_value, l_prime = _native_l(data, t)
    for eps in OSC_EPSILONS:
        c_eps = float(np.max(np.abs(t) ** (1.0 + eps) * np.abs(l_prime)))
        values[f"osc_C[{eps:g}]"] = c_eps
        checks[f"osc_C[{eps:g}]"] = math.isfinite(c_eps)

    checks["ellipticity"] = bool(np.min(l_value) >= 0.5 and np.max(l_value) <= 1.5)
    values["l_min"], values["l_max"] = float(np.min(l_value)), float(np.max(l_value))
    index = np.repeat(np.arange(seq.N), per_interval)
    l_prime_bound = bumps.j_second_sup * seq.p[index] / (seq.r[index] ** 2 * seq.z[index])
    checks["l_prime_bound"] = bool(np.all(np.abs(l_prime) <= l_prime_bound * (1.0 + 1e-12)))

    middle = np.arange(max(1, seq.N // 2), seq.N + 1)
    slope, _ = fit_power_law(middle + seq.j0, seq.cond2_ratio()[middle - 1])
    values["cond2_slope"] = slope
    checks["cond2_slope"] = abs(slope + 1.0) <= 0.05
    values["q_exponent"], values["p_exponent"] = seq.growth.q_exponent, seq.growth.p_exponent
    values["lambda_q"], values["lambda_p"] = seq.growth.lambda_q, seq.growth.lambda_p
    checks["q_growth"] = seq.growth.q_exponent >= 1.75 - 0.05 and seq.growth.lambda_q > 0.0
    checks["p_growth"] = seq.growth.p_exponent <= 1.25 + 0.05 and seq.growth.lambda_p > 0.0

    certificates = {}
    for k in range(5):
        for power in range(1, 6):
            n_cert = decay_certificate(seq, bumps, k, power)
            certificates[f"k={k},M={power}"] = n_cert
    tables["decay_certificates"] = certificates
    checks["smooth_decay"] = all(n is not None for n in certificates.values())
    checks["vanishing"], vanish = vanishes_from_half(seq, bumps)
    values["vanishing_n_cert"] = float(vanish) if vanish is not None else float("nan")

    _LOGGER.info("verify_conditions(j0=%d, N=%d): %d/%d checks passed", seq.j0, seq.N, sum(checks.values()), len(checks))
    return ConditionsReport(checks, values, tables)


class LowerOrderSweep(NamedTuple):
    sup_b1: float
    sup_b2: float
    sup_c: float
    first_half: float
    second_half: float
    degenerate: int


def lower_order_sweep(data: CounterexampleData, rng: np.random.Generator, per_interval: int = 8, x_samples: int = 8) -> LowerOrderSweep:
    """Sup of |b1|, |b2|, |c| per interval at random points; the later half should not exceed the earlier one."""
    seq = data.seq
    s = rng.random((seq.N, per_interval))
    t = (seq.a[:-1, None] + seq.r[:, None] * s).reshape(-1)
    t = np.repeat(t, x_samples)
    x1 = rng.uniform(-math.pi, math.pi, t.size)
    x2 = rng.uniform(-math.pi, math.pi, t.size)
    sign = 1.0 if data.orientation == NATIVE else -1.0
    lower = eval_lower_order(data, sign * t, x1, x2)
    size = np.maximum.reduce([np.abs(lower.b1), np.abs(lower.b2), np.abs(lower.c)]).reshape(seq.N, -1).max(axis=1)
    half = seq.N // 2
    return LowerOrderSweep(
        float(np.max(np.abs(lower.b1))),
        float(np.max(np.abs(lower.b2))),
        float(np.max(np.abs(lower.c))),
        float(np.max(size[:half])),
        float(np.max(size[half:])),
        int(np.count_nonzero(lower.flag == FLAG_DEGENERATE)),
    )


def residual_samples(data: CounterexampleData, rng: np.random.Generator, count: int = 10_000) -> float:
    """Largest ``|Lu + b1 d_x1 u + b2 d_x2 u + c u| / (|Lu| + 1)`` at random points of the realized intervals."""
    seq = data.seq
    index = rng.integers(0, seq.N, count)
    t = seq.a[index] + seq.r[index] * rng.random(count)
    if data.orientation == FORWARD:
        t = -t
    x1 = rng.uniform(-math.pi, math.pi, count)
    x2 = rng.uniform(-math.pi, math.pi, count)
    sample = eval_solution(data, t, x1, x2)
    l_value, _ = eval_l(data, t)
    lu = _operator_mantissa(data, sample, l_value)
    lower = eval_lower_order(data, t, x1, x2)
    return float(np.max(np.abs(lower.residual) / (np.abs(lu) + 1.0)))
