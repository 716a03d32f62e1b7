"""Tests for osgood_carleman.counterexample."""
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from osgood_carleman.counterexample import (
    BRANCH_HEAD,
    BRANCH_INTERVAL,
    BRANCH_TAIL,
    BRANCH_ZERO,
    FLAG_OK,
    FLAG_TAIL,
    FLAG_ZERO,
    FORWARD,
    NATIVE,
    BumpProfiles,
    CounterexampleData,
    build_counterexample,
    build_sequences,
    choose_j0,
    cond1_witness,
    eval_grid,
    eval_l,
    eval_lower_order,
    eval_solution,
    eval_v,
    eval_w,
    flip_time,
    holder_quotient,
    junction_mismatch,
    junction_profile,
    lower_order_sweep,
    residual_samples,
    vanishes_from_half,
    verify_conditions,
)
from osgood_carleman.errors import ConfigurationError, DomainError
from osgood_carleman.helpers import make_rng

J0 = 1441


@pytest.fixture(scope="module")
def data():
    return build_counterexample(j0=J0, N=200)


@pytest.fixture(scope="module")
def bumps():
    return BumpProfiles()


def _time(data, n, s):
    """Native time at local coordinate s of interval n (1-based)."""
    return data.seq.a[n - 1] + data.seq.r[n - 1] * np.asarray(s, dtype=float)


class TestBumpProfiles:
    @given(st.floats(min_value=0.25, max_value=1.0))
    def test_a_vanishes_after_quarter(self, s):
        assert BumpProfiles().A(s) == 0.0

    @given(st.floats(min_value=-1.0, max_value=0.2))
    def test_a_plateau(self, s):
        assert BumpProfiles().A(s) == 1.0

    @given(st.floats(min_value=0.34, max_value=1.0))
    def test_c_plateau(self, s):
        assert BumpProfiles().C(s) == 1.0

    @given(st.floats(min_value=-1.0, max_value=1.0 / 6.0))
    def test_j_low_plateau(self, s):
        assert BumpProfiles().J(s) == -2.0

    @given(st.floats(min_value=0.21, max_value=0.33))
    def test_j_high_plateau(self, s):
        assert BumpProfiles().J(s) == 2.0

    def test_endpoints(self, bumps):
        assert bumps.B(0.0) == 0.0 and bumps.B(1.0) == 0.0
        assert bumps.C(0.0) == 0.0
        assert bumps.J(1.0) == -2.0

    def test_j_prime_sup(self, bumps):
        assert bumps.j_prime_sup == pytest.approx(240.0, rel=1e-6)
        s = np.linspace(0.0, 1.0, 200_001)
        assert np.max(np.abs(bumps.J(s, 1))) <= bumps.j_prime_sup * (1.0 + 1e-12)

    def test_b_derivatives(self, bumps):
        s = np.linspace(0.05, 0.95, 37)
        h = 1e-6
        np.testing.assert_allclose(bumps.B(s, 1), (bumps.B(s + h) - bumps.B(s - h)) / (2 * h), atol=1e-5)
        np.testing.assert_allclose(bumps.B(s, 2), (bumps.B(s + h, 1) - bumps.B(s - h, 1)) / (2 * h), atol=1e-3)

    def test_derivative_scale_positive(self, bumps):
        assert bumps.derivative_scale >= bumps.j_prime_sup / 4.0


class TestSequences:
    def test_rejects_small_j0(self):
        with pytest.raises(DomainError) as err:
            build_sequences(1, 10)
        assert err.value.reason == "invalid_j0:1"

    def test_rejects_single_interval(self):
        with pytest.raises(DomainError):
            build_sequences(J0, 1)

    def test_shapes_and_monotonicity(self, data):
        seq = data.seq
        assert seq.a.shape == (201,) and seq.r.shape == (200,) and seq.p.shape == (200,)
        assert np.all(np.diff(seq.a) > 0.0) and -1.0 < seq.a[0] and seq.a[-1] < 0.0
        np.testing.assert_allclose(seq.r, np.diff(seq.a), rtol=1e-9)
        assert seq.q[0] == 0.0
        assert np.all(seq.p > 1.0)

    def test_q_recursion(self, data):
        seq = data.seq
        np.testing.assert_allclose(np.diff(seq.q), seq.z[1:] * seq.r, rtol=1e-12)
        # p_n = (z_{n+1} - z_n) r_n
        np.testing.assert_allclose(seq.p, (seq.z[1:] - seq.z[:-1]) * seq.r, rtol=1e-12)

    def test_cond2_bound(self, data):
        assert np.max(data.seq.cond2_ratio()) <= 1.0 / (2.0 * data.bumps.j_prime_sup)

    def test_growth_fit_finite(self, data):
        assert all(math.isfinite(value) for value in data.seq.growth)


class TestChooseJ0:
    def test_smallest_admissible(self):
        assert choose_j0(100) == J0

    def test_previous_value_fails_cond2(self, bumps):
        seq = build_sequences(J0 - 1, 100)
        assert np.max(seq.cond2_ratio()) > 1.0 / (2.0 * bumps.j_prime_sup)

    def test_needs_enough_intervals(self):
        with pytest.raises(ConfigurationError):
            choose_j0(50)

    def test_witnesses_decay_after_peak(self):
        series = cond1_witness(build_sequences(J0, 100), (1, 1, 1))
        peak = int(np.argmax(series))
        assert np.all(np.diff(series[peak:]) <= 0.0)


class TestCounterexampleData:
    def test_rejects_l_sign(self, data):
        with pytest.raises(ConfigurationError):
            CounterexampleData(data.seq, l_sign=0)

    def test_rejects_orientation(self, data):
        with pytest.raises(ConfigurationError):
            CounterexampleData(data.seq, orientation="sideways")

    def test_flip_time_involution(self, data):
        assert flip_time(data).orientation == FORWARD
        assert flip_time(flip_time(data)).orientation == NATIVE


class TestSolution:
    @pytest.mark.parametrize("n", [1, 3, 120, 200])
    def test_assembly_from_pieces(self, data, n):
        s = np.array([0.05, 1.0 / 6.0, 0.22, 0.3, 0.6, 0.9])
        t = _time(data, n, s)
        x1, x2 = 0.3, -0.7
        sample = eval_solution(data, t, x1, x2)
        log_v, cos_v = eval_v(data, n, t, x1)
        log_w, cos_w = eval_w(data, n, t, x2)
        log_next, cos_next = eval_v(data, n + 1, t, x1)
        bumps = data.bumps
        expected = (
            bumps.A(s) * cos_v
            + bumps.B(s) * np.exp(log_w - log_v) * cos_w
            + bumps.C(s) * np.exp(log_next - log_v) * cos_next
        )
        actual = sample.u * np.exp(sample.log_scale - log_v)
        np.testing.assert_allclose(actual, expected, rtol=1e-12, atol=1e-15)
        assert set(sample.branch) == {BRANCH_INTERVAL}

    def test_branches(self, data):
        seq = data.seq
        t = np.array([seq.a[0] - 0.01, _time(data, 5, 0.5), 0.5 * seq.a[-1], 0.0, 0.2])
        sample = eval_solution(data, t, 0.1, 0.2)
        assert list(sample.branch) == [BRANCH_HEAD, BRANCH_INTERVAL, BRANCH_TAIL, BRANCH_ZERO, BRANCH_ZERO]
        assert np.all(sample.u[2:] == 0.0)
        assert np.all(np.isneginf(sample.log_scale[2:]))

    def test_head_is_first_exponential(self, data):
        seq = data.seq
        t = seq.a[0] - 1e-6
        sample = eval_solution(data, t, 0.4, 0.0)
        assert sample.log_scale == pytest.approx(seq.z[0] * 1e-6, rel=1e-6)
        assert sample.u == pytest.approx(math.cos(math.sqrt(seq.z[0]) * 0.4))

    def test_forward_orientation(self, data):
        forward = flip_time(data)
        t = _time(data, 7, np.array([0.1, 0.5]))
        native = eval_solution(data, t, 0.2, 0.3)
        flipped = eval_solution(forward, -t, 0.2, 0.3)
        np.testing.assert_array_equal(flipped.u, native.u)
        np.testing.assert_array_equal(flipped.ut, -native.ut)
        assert np.all(eval_solution(forward, -0.3, 0.0, 0.0).u == 0.0)

    def test_physical_values_underflow_to_zero(self, data):
        t = _time(data, 50, 0.5)
        u, ut, *_ = eval_solution(data, t, 0.0, 0.0).as_tuple()
        assert u == 0.0 and ut == 0.0

    def test_eval_w_outside(self, data):
        with pytest.raises(DomainError):
            eval_w(data, 0, -0.5, 0.0)
        with pytest.raises(DomainError):
            eval_w(data, data.seq.N + 1, -0.5, 0.0)

    @pytest.mark.parametrize("n", [1, 2, 3, 5, 150, 199])
    def test_junction_continuity(self, data, n):
        x = np.linspace(-math.pi, math.pi, 7)
        assert junction_mismatch(data, n, x, x[::-1]) <= 1e-12

    def test_every_junction_continuous(self, data):
        x = np.linspace(-math.pi, math.pi, 9)
        gaps = junction_profile(data, x, x[::-1], chunk=64)
        assert gaps.shape == (data.seq.N - 1,)
        assert np.max(gaps) <= 1e-12

    @pytest.mark.slow
    def test_every_junction_continuous_at_full_size(self):
        data = build_counterexample(j0=J0, N=10_000)
        rng = make_rng(7, "junctions")
        gaps = junction_profile(data, rng.uniform(-math.pi, math.pi, 16), rng.uniform(-math.pi, math.pi, 16))
        assert np.max(gaps) <= 1e-12

    def test_single_piece_matches_solution_exactly(self, data):
        n = 40
        t = _time(data, n, 1.0 / 6.0)
        sample = eval_solution(data, t, 0.0, 0.0)
        log_v, _ = eval_v(data, n, t, 0.0)
        assert sample.log_scale == log_v

    def test_eval_v_outside(self, data):
        with pytest.raises(DomainError):
            eval_v(data, data.seq.N + 2, -0.5, 0.0)

    def test_junction_index(self, data):
        with pytest.raises(DomainError):
            junction_mismatch(data, data.seq.N, 0.0, 0.0)


class TestCoefficientL:
    @pytest.mark.parametrize("l_sign", [-1, 1])
    def test_ellipticity(self, data, l_sign):
        signed = CounterexampleData(data.seq, data.bumps, NATIVE, l_sign)
        t = (data.seq.a[:-1, None] + data.seq.r[:, None] * np.linspace(0.0, 1.0, 60)[None, :]).reshape(-1)
        values, _ = eval_l(signed, t)
        assert values.min() >= 0.5 and values.max() <= 1.5

    def test_one_outside_intervals(self, data):
        values, primes = eval_l(data, np.array([data.seq.a[0] - 0.1, 0.5 * data.seq.a[-1], 0.3]))
        np.testing.assert_array_equal(values, 1.0)
        np.testing.assert_array_equal(primes, 0.0)

    def test_derivative(self, data):
        t = _time(data, 4, np.linspace(0.1, 0.4, 7))
        h = 1e-4 * data.seq.r[3]
        values, primes = eval_l(data, t)
        numeric = (eval_l(data, t + h)[0] - eval_l(data, t - h)[0]) / (2 * h)
        np.testing.assert_allclose(primes, numeric, rtol=1e-5, atol=1e-5 * np.max(np.abs(primes)))

    def test_forward_derivative_flips(self, data):
        t = _time(data, 4, 0.3)
        _, native = eval_l(data, t)
        _, forward = eval_l(flip_time(data), -t)
        assert forward == pytest.approx(-native)

    def test_holder_quotient_finite(self, data):
        assert math.isfinite(holder_quotient(data, 0.5, samples=200))


class TestLowerOrder:
    def test_residual_identity(self, data):
        assert residual_samples(data, make_rng(7, "counterexample"), 500) <= 1e-10

    def test_residual_identity_forward(self, data):
        assert residual_samples(flip_time(data), make_rng(7, "counterexample"), 500) <= 1e-10

    def test_flags(self, data):
        t = np.array([_time(data, 2, 0.4), 0.5 * data.seq.a[-1], 0.1])
        lower = eval_lower_order(data, t, 0.3, 0.4)
        assert list(lower.flag) == [FLAG_OK, FLAG_TAIL, FLAG_ZERO]
        assert lower.b1[1] == 0.0 and lower.c[2] == 0.0

    def test_sweep_finite(self, data):
        sweep = lower_order_sweep(data, make_rng(7, "sweep"), per_interval=2, x_samples=2)
        assert all(math.isfinite(value) for value in sweep[:5])

    def test_grid_rows(self, data):
        rows = eval_grid(data, [_time(data, 1, 0.5), 0.1], [0.0, 1.0], [0.5])
        assert len(rows) == 4
        assert list(rows[0]) == ["t", "x1", "x2", "u", "l", "b1", "b2", "c"]
        assert rows[-1]["u"] == 0.0 and rows[-1]["l"] == 1.0


class TestConditions:
    def test_needs_long_family(self, data):
        with pytest.raises(ConfigurationError):
            verify_conditions(data)

    @pytest.mark.parametrize(("n_cert", "expected"), [(None, False), (1, True), (100, True), (101, False), (200, False)])
    def test_vanishing_needs_first_half(self, data, monkeypatch, n_cert, expected):
        monkeypatch.setattr("osgood_carleman.counterexample.decay_certificate", lambda *args: n_cert)
        assert vanishes_from_half(data.seq, data.bumps) == (expected, n_cert)

    def test_vanishing_certificate_within_half(self, data):
        ok, n_cert = vanishes_from_half(data.seq, data.bumps)
        assert ok and n_cert <= data.seq.N // 2

    @pytest.mark.slow
    def test_conditions_hold_at_1000(self):
        data = build_counterexample(j0=J0, N=1000)
        report = verify_conditions(data)
        failed = [name for name, ok in report.checks.items() if not ok]
        assert failed == []
        assert report.values["l_min"] >= 0.5
        assert len(report.tables["witnesses"]) == 54
