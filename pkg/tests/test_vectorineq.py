import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cknstab.vectorineq import (
    VecPair,
    anchor_vector,
    bregman_gap,
    bregman_gap_batch,
    bregman_gap_signed,
    estimate_gap_constant,
    gap_kernel,
    gap_kernel_batch,
    gap_lower_bound,
    gap_lower_bound_batch,
    gap_scale,
    gap_scale_batch,
    half_power_difference_check,
    power_sum_check,
    sample_vector_pairs,
)

from oracles import reduced_scan_gap_constant

finite = st.floats(-1e3, 1e3, allow_nan=False)
exponents = st.floats(1.05, 4.0)


class TestBregmanGap:
    def test_equal_arguments_vanish(self):
        for p in (1.3, 2.0, 3.7):
            assert bregman_gap([1.0, -2.0], [1.0, -2.0], p) == pytest.approx(0.0, abs=1e-14)

    def test_p2_is_squared_distance(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            X, Y = rng.standard_normal(3), rng.standard_normal(3)
            assert bregman_gap(X, Y, 2.0) == pytest.approx(float(np.sum((Y - X) ** 2)))

    def test_hand_value_p3(self):
        assert bregman_gap([1.0, 0.0], [0.0, 0.0], 3.0) == pytest.approx(2.0)

    def test_zero_first_argument(self):
        assert bregman_gap([0.0, 0.0], [2.0, 0.0], 1.5) == pytest.approx(2.0**1.5)

    def test_signed_matches_vector_on_collinear(self):
        rng = np.random.default_rng(5)
        for p in (1.2, 1.5, 2.0, 2.7, 3.0):
            e = rng.standard_normal(4)
            e /= np.linalg.norm(e)
            xs = rng.uniform(-3, 3, 40)
            ys = rng.uniform(-3, 3, 40)
            got = bregman_gap_signed(xs, ys, p)
            for x, y, g in zip(xs, ys, got):
                want = bregman_gap(x * e, y * e, p)
                assert g == pytest.approx(want, rel=1e-10, abs=1e-12)

    @given(x=st.tuples(finite, finite), y=st.tuples(finite, finite), p=exponents)
    @settings(max_examples=300, deadline=None)
    def test_nonnegative(self, x, y, p):
        g = bregman_gap(x, y, p)
        assert g >= -1e-12 * (1.0 + gap_scale(x, y, p))

    def test_rotation_invariance(self):
        rng = np.random.default_rng(11)
        Q, _ = np.linalg.qr(rng.standard_normal((4, 4)))
        for p in (1.5, 2.0, 3.0):
            for _ in range(20):
                X, Y = rng.standard_normal(4), rng.standard_normal(4)
                assert bregman_gap(Q @ X, Q @ Y, p) == pytest.approx(
                    bregman_gap(X, Y, p), rel=1e-12, abs=1e-12)
                assert gap_kernel(Q @ X, Q @ Y, p) == pytest.approx(
                    gap_kernel(X, Y, p), rel=1e-12, abs=1e-12)

    def test_scaling_covariance(self):
        rng = np.random.default_rng(12)
        for p in (1.3, 2.0, 2.9):
            for t in (0.25, 2.0, 17.0):
                X, Y = rng.standard_normal(3), rng.standard_normal(3)
                assert bregman_gap(t * X, t * Y, p) == pytest.approx(
                    t**p * bregman_gap(X, Y, p), rel=1e-12, abs=1e-13)

    def test_rejects_bad_exponent(self):
        with pytest.raises(ValueError):
            bregman_gap([1.0], [2.0], 1.0)


class TestAnchorVector:
    def test_small_p_keeps_x_when_x_dominates(self):
        z = anchor_vector([3.0, 0.0], [1.0, 0.0], 1.5)
        assert np.allclose(z, [3.0, 0.0])

    def test_large_p_keeps_x_when_s_dominates(self):
        z = anchor_vector([1.0, 0.0], [2.0, 0.0], 3.0)
        assert np.allclose(z, [1.0, 0.0])

    def test_interpolating_branch_value(self):
        z = anchor_vector([1.0, 0.0], [2.0, 0.0], 1.5)
        assert np.allclose(z, [9.0 / 16.0, 0.0])

    def test_large_p_switched_branch(self):
        z = anchor_vector([2.0, 0.0], [1.0, 0.0], 4.0)
        # (|s|/|x|)^(1/(p-2)) s with ratio 1/2, power 1/2
        assert np.allclose(z, [math.sqrt(0.5), 0.0])

    def test_magnitude_never_exceeds_inputs(self):
        rng = np.random.default_rng(2)
        for p in (1.2, 1.7, 2.5, 3.5):
            for _ in range(40):
                x = rng.standard_normal(3)
                s = rng.standard_normal(3)
                nz = float(np.linalg.norm(anchor_vector(x, s, p)))
                hi = max(np.linalg.norm(x), np.linalg.norm(s))
                assert 0.0 <= nz <= hi + 1e-12

    def test_rejects_degenerate_input(self):
        with pytest.raises(ValueError):
            anchor_vector([0.0, 0.0], [0.0, 0.0], 1.5)
        with pytest.raises(ValueError):
            anchor_vector([1.0, 0.0], [1.0, 0.0], 2.0)


class TestGapLowerBound:
    def test_zero_y_gives_zero(self):
        for p in (1.5, 2.0, 3.0):
            assert gap_lower_bound([1.0, 2.0], [0.0, 0.0], p, 0.5, 0.1) == pytest.approx(0.0)

    def test_gamma_one_reduces_to_tail(self):
        x, y = [1.0, 0.5], [0.2, -0.1]
        val = gap_lower_bound(x, y, 1.5, 1.0, 0.3)
        ny = np.linalg.norm(y)
        nx = np.linalg.norm(x)
        assert val == pytest.approx(0.3 * min(ny**1.5, nx**-0.5 * ny**2))
        val2 = gap_lower_bound(x, y, 3.0, 1.0, 0.3)
        assert val2 == pytest.approx(0.3 * ny**3)

    def test_hand_value_case_p3(self):
        # x = y = (1,0): z = x, bracket = 3*1*1 + 3*1*1*(1-2)^2 = 6
        val = gap_lower_bound([1.0, 0.0], [1.0, 0.0], 3.0, 0.5, 0.1)
        assert val == pytest.approx(0.25 * 6.0 + 0.1)

    def test_bound_below_gap(self):
        rng = np.random.default_rng(7)
        X, Y = sample_vector_pairs(rng, 2000)
        for p in (1.1, 1.5, 1.9, 2.0, 2.5, 3.0):
            g = bregman_gap_batch(X, Y, p)
            scale = gap_scale_batch(X, Y, p)
            for gamma in (0.25, 0.5, 0.75, 1.0):
                lb, sc = gap_lower_bound_batch(X, Y - X, p, gamma, 0.0, with_scale=True)
                assert np.all(g >= lb - 1e-12 * (scale + sc)), (p, gamma)

    def test_rejects_bad_gamma(self):
        with pytest.raises(ValueError):
            gap_lower_bound([1.0], [1.0], 1.5, 0.0, 0.1)


class TestGapKernel:
    def test_equal_points(self):
        assert gap_kernel([1.0, 2.0], [1.0, 2.0], 1.5) == 0.0

    def test_large_p_distance_power(self):
        assert gap_kernel([0.0, 0.0], [3.0, 4.0], 2.5) == pytest.approx(5.0**2.5)

    def test_small_p_branch_values(self):
        val = gap_kernel([1.0, 0.0], [3.0, 0.0], 1.5)
        assert val == pytest.approx(min(2.0**1.5, 4.0))
        assert val == pytest.approx(2.0**1.5)


class TestEstimateGapConstant:
    def test_p2_identity_ratio(self):
        est = estimate_gap_constant(2.0, 100_000, seed=0)
        assert est.value == pytest.approx(1.0, abs=1e-12)

    def test_rejects_small_sample_count(self):
        with pytest.raises(ValueError):
            estimate_gap_constant(1.5, 100, seed=0)

    def test_witness_reproduces_value(self):
        for p in (1.5, 3.0):
            est = estimate_gap_constant(p, 20_000, seed=3)
            X, Y = est.worst_witness.arrays()
            again = bregman_gap(X, Y, p) / gap_kernel(X, Y, p)
            assert again == pytest.approx(est.value, rel=1e-12)

    @pytest.mark.parametrize("p", [1.5, 3.0])
    def test_estimate_dominates_oracle(self, p):
        # a random-scan minimum can never undershoot the true infimum
        orc = reduced_scan_gap_constant(p)
        est = estimate_gap_constant(p, 50_000, seed=0)
        assert 0.0 < orc <= est.value <= 1.0
        assert est.value <= orc * 1.10  # stress blocks land near the minimizer

    def test_oracle_matches_closed_forms(self):
        # observed by the dense reduced scan: the 1 < p < 2 minimum sits at
        # the collinear kernel crossover Y = 2X
        assert reduced_scan_gap_constant(1.5) == pytest.approx(2.0**1.5 - 2.5, abs=1e-10)
        assert reduced_scan_gap_constant(3.0) == pytest.approx(2.0 - math.sqrt(2.0), abs=1e-9)
        assert reduced_scan_gap_constant(4.0) == pytest.approx(1.0 / 3.0, abs=1e-9)

    def test_json_record(self):
        est = estimate_gap_constant(1.5, 10_000, seed=9)
        text = est.to_json(p=1.5, gamma=None)
        assert '"constant"' in text and '"seed": 9' in text


class TestVecPair:
    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            VecPair((1.0,), (1.0, 2.0), 1.5)


class TestHalfPowerDifference:
    def test_equal_arguments(self):
        rep = half_power_difference_check(2.0, 2.0, 1.5)
        assert rep.lhs == pytest.approx(0.0) and not rep.violation

    def test_one_zero(self):
        rep = half_power_difference_check(1.0, 0.0, 1.5)
        assert rep.lhs == pytest.approx(1.0)
        assert rep.rhs == pytest.approx(4.0)
        assert not rep.violation

    def test_opposite_signs(self):
        rep = half_power_difference_check(1.0, -1.0, 1.5)
        assert rep.lhs == pytest.approx(4.0)
        assert rep.rhs == pytest.approx(4.0 * 2.0**1.5)
        assert not rep.violation

    def test_same_sign_refinement_recorded(self):
        rep = half_power_difference_check(3.0, 1.0, 1.5)
        assert rep.detail["same_sign_rhs"] == pytest.approx(2.0**1.5)
        assert not rep.detail["same_sign_violation"]

    @given(m=finite, n=finite, p=st.floats(1.01, 1.99))
    @settings(max_examples=500, deadline=None)
    def test_never_violated(self, m, n, p):
        assert not half_power_difference_check(m, n, p).violation

    def test_rejects_bad_exponent(self):
        with pytest.raises(ValueError):
            half_power_difference_check(1.0, 2.0, 2.5)


class TestPowerSum:
    def test_tight_case(self):
        rep = power_sum_check(1.0, 1.0, 2.0)
        assert rep.lhs == pytest.approx(4.0) and rep.rhs == pytest.approx(4.0)
        assert not rep.violation

    def test_cancellation(self):
        rep = power_sum_check(1.0, -1.0, 3.0)
        assert rep.lhs == 0.0 and not rep.violation

    def test_subadditive_branch(self):
        rep = power_sum_check(3.0, 1.0, 0.5)
        assert rep.lhs == pytest.approx(2.0)
        assert rep.rhs == pytest.approx(math.sqrt(3.0) + 1.0)
        assert rep.detail["constant"] == 1.0
        assert not rep.violation

    @given(m=finite, n=finite, q=st.floats(0.05, 5.0))
    @settings(max_examples=500, deadline=None)
    def test_never_violated(self, m, n, q):
        assert not power_sum_check(m, n, q).violation


class TestAppendixScalarFacts:
    def test_shifted_power_gap(self):
        # t^(p/2) - 1 < (t-1)^(p/2) for t > 1, 1 < p < 2
        t = np.linspace(1.0 + 1e-9, 50.0, 10_000)
        for p in (1.1, 1.5, 1.9):
            assert np.all(t ** (p / 2) - 1.0 <= (t - 1.0) ** (p / 2) + 1e-12)

    def test_sum_power_gap(self):
        # t^(p/2) + 1 < 2 (t+1)^(p/2) for t > 0, 1 < p < 2
        t = np.geomspace(1e-6, 1e6, 10_000)
        for p in (1.1, 1.5, 1.9):
            assert np.all(t ** (p / 2) + 1.0 < 2.0 * (t + 1.0) ** (p / 2))
