import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cknstab.params import (
    PRESETS,
    CknParams,
    Region,
    StabilityForm,
    also_in_q,
    check_hypotheses,
    classify_region,
    hypotheses_hold,
    in_p_family,
    in_q_family,
    sharp_constant_l2,
    sharp_constant_lp,
)


class TestClassifyRegion:
    def test_p1_interior(self):
        assert classify_region(3, 0.0, 0.0) is Region.P1

    def test_diagonal_exact(self):
        assert classify_region(3, 1.0, 0.0) is Region.DIAGONAL

    def test_diagonal_on_43_point(self):
        # b - a + 1 = 0 puts (a, b) = (3, 2) on the diagonal, not in Q1
        assert classify_region(4, 3.0, 2.0) is Region.DIAGONAL

    def test_q2_interior(self):
        assert classify_region(4, 1.5, 1.5) is Region.Q2

    def test_q1_interior(self):
        assert classify_region(10, 5.0, 1.0) is Region.Q1

    def test_p2_interior(self):
        assert classify_region(3, 4.0, 2.0) is Region.P2
        # b - a + 1 < 0 with b >= (N-2)/2 is a P2 cell even for b large
        assert classify_region(4, 3.5, 2.0) is Region.P2

    def test_boundary_reports_p_tag(self):
        N, b = 4, 1.0  # b = (N-2)/2
        assert classify_region(N, 0.0, b) is Region.P1
        assert also_in_q(N, 0.0, b)
        assert classify_region(N, 3.0, b) is Region.P2
        assert also_in_q(N, 3.0, b)
        assert not also_in_q(N, 0.0, 0.5)

    def test_non_finite_inputs(self):
        assert classify_region(3, math.nan, 0.0) is Region.OTHER

    def test_family_helpers(self):
        assert in_p_family(Region.P1) and in_p_family(Region.P2) and in_p_family(Region.P)
        assert in_q_family(Region.Q1) and in_q_family(Region.Q2) and in_q_family(Region.Q)
        assert not in_p_family(Region.Q1) and not in_q_family(Region.DIAGONAL)

    def test_total_and_deterministic_on_grid(self):
        grid = np.linspace(-5.0, 5.0, 100)
        tags = [classify_region(3, a, b) for a in grid for b in grid]
        again = [classify_region(3, a, b) for a in grid for b in grid]
        assert tags == again
        assert all(t in (Region.P1, Region.P2, Region.Q1, Region.Q2, Region.DIAGONAL)
                   for t in tags)

    @given(a=st.floats(-50, 50), b=st.floats(-50, 50), N=st.integers(1, 12))
    @settings(max_examples=300, deadline=None)
    def test_membership_consistency(self, a, b, N):
        tag = classify_region(N, a, b)
        t = b - a + 1.0
        half = (N - 2.0) / 2.0
        if t == 0.0:
            assert tag is Region.DIAGONAL
        elif tag is Region.P1:
            assert t > 0.0 and b <= half
        elif tag is Region.P2:
            assert t < 0.0 and b >= half
        elif tag is Region.Q1:
            assert t < 0.0 and b < half
        elif tag is Region.Q2:
            assert t > 0.0 and b > half


class TestSharpConstants:
    def test_l2_p1(self):
        assert sharp_constant_l2(3, 0.0, 0.0) == pytest.approx(1.0)

    def test_l2_diagonal(self):
        assert sharp_constant_l2(3, 1.0, 0.0) == pytest.approx(0.5)

    def test_l2_q2(self):
        assert sharp_constant_l2(4, 1.5, 1.5) == pytest.approx(1.0)

    def test_l2_p2_uses_p_formula(self):
        assert sharp_constant_l2(4, 3.5, 2.0) == pytest.approx(abs(4 - 6.5) / 2)

    def test_l2_q1(self):
        # |N - (3b - a + 3)| / 2 in the Q regions
        assert sharp_constant_l2(10, 5.0, 1.0) == pytest.approx(abs(10 - (3 - 5 + 3)) / 2)

    def test_lp_hydrogen(self):
        assert sharp_constant_lp(CknParams(3, 2.0, 0.0, 0.0)) == pytest.approx(1.0)

    def test_lp_vanishing_numerator(self):
        # (p-1)a + b + 1 = N kills the constant
        params = CknParams(4, 2.0, 2.0, 1.0)
        assert sharp_constant_lp(params) == pytest.approx(0.0)

    def test_lp_fractional(self):
        params = CknParams(3, 1.5, 4.0 / 3.0, 2.0 / 3.0)
        assert sharp_constant_lp(params) == pytest.approx((2.0 / 3.0) / 1.5)

    def test_p2_matches_l2_in_p_region(self):
        for a, b in ((0.0, 0.0), (0.3, 0.4), (-1.0, 0.2)):
            params = CknParams(5, 2.0, a, b)
            assert in_p_family(classify_region(5, a, b))
            assert sharp_constant_lp(params) == pytest.approx(sharp_constant_l2(5, a, b))

    def test_diagonal_constant_formula(self):
        for b in (-0.5, 0.0, 1.2):
            assert sharp_constant_l2(4, b + 1.0, b) == pytest.approx(abs(4 - 2 * (b + 1)) / 2)


class TestHypotheses:
    def test_half_power_preset_all_true(self):
        params = CknParams(3, 1.5, 4.0 / 3.0, 2.0 / 3.0)
        checks = check_hypotheses(StabilityForm.SI_HALF_POWER, params)
        assert all(ok for _, ok in checks), checks

    def test_mixed_preset_all_true(self):
        params = CknParams(4, 2.0, 1.0, 2.0 / 3.0)
        assert hypotheses_hold(StabilityForm.NI_MIXED, params)
        assert hypotheses_hold(StabilityForm.SI_MIXED, params)

    def test_pnorm_rejects_small_p(self):
        params = CknParams(3, 1.5, 4.0 / 3.0, 2.0 / 3.0)
        checks = dict(check_hypotheses(StabilityForm.SI_PNORM, params))
        assert checks["p >= 2"] is False

    def test_half_power_rejects_large_p(self):
        params = CknParams(4, 2.5, 1.0, 0.5)
        checks = dict(check_hypotheses(StabilityForm.SI_HALF_POWER, params))
        assert checks["1 < p < 2"] is False

    def test_equality_tolerance(self):
        # a = Nb/(N-p) perturbed by 1e-13 relative still counts as equal
        b = 0.5
        a = 4 * b / 2 * (1.0 + 1e-13)
        assert hypotheses_hold(StabilityForm.SI_PNORM, CknParams(4, 2.0, a, b))
        a_bad = 4 * b / 2 * (1.0 + 1e-9)
        assert not hypotheses_hold(StabilityForm.SI_PNORM, CknParams(4, 2.0, a_bad, b))

    def test_half_power_implies_scaling(self):
        # any parameters passing the half-power hypotheses pass the base ones
        for N in (3, 4, 6):
            for p in (1.2, 1.5, 1.9):
                b = (N - 2.0) / p
                if not 0 <= b < (N - p) / p:
                    continue
                a = N * b / (N - p)
                params = CknParams(N, p, a, b)
                if hypotheses_hold(StabilityForm.SI_HALF_POWER, params):
                    assert hypotheses_hold(StabilityForm.SCALING, params)

    def test_scaling_hypotheses(self):
        assert hypotheses_hold(StabilityForm.SCALING, CknParams(3, 1.5, 4 / 3, 2 / 3))
        assert not hypotheses_hold(StabilityForm.SCALING, CknParams(3, 2.0, 3.0, 0.0))

    def test_presets_satisfy_their_forms(self):
        for name, preset in PRESETS.items():
            if preset.form is not None:
                assert hypotheses_hold(preset.form, preset.params), name


class TestCknParams:
    def test_validation(self):
        with pytest.raises(ValueError):
            CknParams(0, 2.0, 0.0, 0.0)
        with pytest.raises(ValueError):
            CknParams(3, 1.0, 0.0, 0.0)

    def test_derived_exponents(self):
        params = CknParams(4, 2.5, 1.0, 0.4)
        assert params.grad_weight == pytest.approx(1.0)
        assert params.mass_weight == pytest.approx(2.5)
        assert params.mixed_weight == pytest.approx(1.5 * 1.0 + 0.4 + 1.0)
        assert params.manifold_power == pytest.approx(0.4)
