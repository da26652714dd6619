import math

import numpy as np
import pytest

from cknstab.params import CknParams
from cknstab.radial import (
    AccuracyError,
    IntegrabilityWarning,
    NonFiniteIntegrandError,
    QuadratureScheme,
    TailEnvelope,
    bump_profile,
    default_scheme,
    dilate_profile,
    extremal_profile,
    extremal_profile_q,
    half_power_transform,
    integrate,
    integrate_report,
    perturb_profile,
    sphere_area,
    truncate_profile,
    unit_bump,
    weighted_norm_report,
    weighted_norm_term,
    zero_profile,
)

from oracles import central_diff, quad_weighted_norm

HALF_POWER_PARAMS = CknParams(3, 1.5, 4.0 / 3.0, 2.0 / 3.0)
HYDROGEN = CknParams(3, 2.0, 0.0, 0.0)


class TestSphereArea:
    def test_circle(self):
        assert sphere_area(2) == pytest.approx(2.0 * math.pi)

    def test_sphere(self):
        assert sphere_area(3) == pytest.approx(4.0 * math.pi)

    def test_four_dimensions(self):
        assert sphere_area(4) == pytest.approx(2.0 * math.pi**2)

    def test_rejects_bad_dimension(self):
        with pytest.raises(ValueError):
            sphere_area(0)


class TestIntegrate:
    def test_linear(self, scheme):
        assert integrate(lambda r: r, scheme, 0.0, 1.0) == pytest.approx(0.5, rel=1e-10)

    def test_gamma_three(self, scheme):
        val = integrate(lambda r: r**2 * np.exp(-r), scheme, scheme.r_min, 64.0)
        assert val == pytest.approx(2.0, rel=1e-9)

    def test_inverse_sqrt(self, scheme):
        val = integrate(lambda r: r**-0.5, scheme, 1e-8, 1.0)
        assert val == pytest.approx(2.0 * (1.0 - 1e-4), rel=1e-10)

    def test_nonfinite_integrand_raises(self, scheme):
        with pytest.raises(NonFiniteIntegrandError):
            integrate(lambda r: 1.0 / (r - r), scheme, 0.5, 1.0)

    def test_accuracy_error_when_capped(self):
        tight = default_scheme(rel_tol=1e-15)
        tight = type(tight)(**{**tight.__dict__, "max_refinements": 1})
        with pytest.raises(AccuracyError):
            integrate(lambda r: np.abs(np.sin(50.0 / (r + 0.01))) ** 1.5, tight, 0.01, 1.0)

    def test_node_doubling_stability(self, scheme):
        dense = default_scheme(nodes_per_panel=64)
        for g, lo, hi in [
            (lambda r: r**2 * np.exp(-r), scheme.r_min, 64.0),
            (lambda r: np.exp(-(r**0.5)) * r**0.25, scheme.r_min, 64.0),
            (lambda r: 1.0 / (1.0 + r**2), scheme.r_min, 64.0),
        ]:
            a = integrate(g, scheme, lo, hi)
            b = integrate(g, dense, lo, hi)
            assert abs(a - b) <= 10.0 * scheme.rel_tol * max(abs(a), abs(b))

    def test_report_fields(self, scheme):
        rep = integrate_report(lambda r: np.exp(-r), scheme, 0.1, 10.0)
        assert rep.converged and rep.panels > 0
        assert rep.value == pytest.approx(math.exp(-0.1) - math.exp(-10.0), rel=1e-10)


class TestSchemeValidation:
    def test_edge_ordering_enforced(self):
        with pytest.raises(ValueError):
            QuadratureScheme(panel_edges=(1.0, 0.5), r_min=0.1, r_max=0.5)

    def test_last_edge_must_be_rmax(self):
        with pytest.raises(ValueError):
            QuadratureScheme(panel_edges=(1.0, 2.0), r_min=0.1, r_max=4.0)

    def test_rmin_below_first_edge(self):
        with pytest.raises(ValueError):
            QuadratureScheme(panel_edges=(1.0, 2.0), r_min=1.5, r_max=2.0)


class TestBumpProfile:
    def test_boundary_values_and_slopes(self):
        u = bump_profile(1.0, 2.0)
        r = np.array([1.0, 2.0, 0.5, 3.0])
        assert np.all(u.eval(r) == 0.0)
        assert np.all(u.deriv(r) == 0.0)

    def test_peak_location_and_value(self):
        u = bump_profile(1.0, 3.0, amplitude=2.5)
        mid = 2.0
        assert float(u.eval(mid)) == pytest.approx(2.5 * math.exp(-1.0), rel=1e-14)
        rs = np.linspace(1.001, 2.999, 2001)
        vals = u.eval(rs)
        assert float(np.max(vals)) <= float(u.eval(mid)) * (1.0 + 1e-12)

    def test_support_reported(self):
        assert bump_profile(0.5, 1.5).support == (0.5, 1.5)

    def test_rejects_bad_interval(self):
        with pytest.raises(ValueError):
            bump_profile(2.0, 1.0)

    def test_unit_bump_peaks_at_one(self):
        u = unit_bump(0.1, 0.15)
        assert float(u.eval(0.125)) == pytest.approx(1.0, rel=1e-14)


class TestExtremalProfile:
    def test_zero_amplitude(self):
        u = extremal_profile(HYDROGEN, 0.0, 1.0)
        assert u.identically_zero
        assert float(u.eval(1.0)) == 0.0

    def test_unit_exponent_specialization(self):
        u = extremal_profile(HYDROGEN, 1.0, 1.0)  # theta = 1
        rs = np.array([0.1, 1.0, 5.0])
        assert np.allclose(u.eval(rs), np.exp(-rs), rtol=1e-14)

    def test_derivative_closed_form(self):
        params = HALF_POWER_PARAMS
        u = extremal_profile(params, 2.0, 1.7)
        theta = params.manifold_power
        rs = np.array([0.3, 1.0, 4.0])
        want = -u.eval(rs) * rs ** (theta - 1.0) / 1.7**theta
        assert np.allclose(u.deriv(rs), want, rtol=1e-13)

    def test_derivative_matches_finite_difference(self):
        u = extremal_profile(HALF_POWER_PARAMS, 1.0, 1.0)
        for r in (0.5, 1.0, 2.0):
            fd = central_diff(u.eval, r, 1e-6 * r)
            assert float(u.deriv(r)) == pytest.approx(fd, rel=1e-7)

    def test_rejects_bad_arguments(self):
        with pytest.raises(ValueError):
            extremal_profile(CknParams(3, 2.0, 2.0, 0.0), 1.0, 1.0)  # theta < 0
        with pytest.raises(ValueError):
            extremal_profile(HYDROGEN, 1.0, -1.0)


class TestExtremalProfileQ:
    def test_zero_amplitude(self):
        u = extremal_profile_q(4, 1.5, 1.5, 0.0, -1.0)
        assert u.identically_zero

    def test_power_factor_cancels_at_special_dimension(self):
        # N = 2(b+1) makes the power factor trivial
        u = extremal_profile_q(4, 1.5, 1.0, 1.0, -1.0)
        rs = np.array([0.5, 1.0, 2.0])
        theta = 1.0 - 1.5 + 1.0
        assert np.allclose(u.eval(rs), np.exp(-rs**theta / theta), rtol=1e-13)

    def test_derivative_matches_finite_difference(self):
        u = extremal_profile_q(4, 1.5, 1.5, 1.0, -1.0)
        for r in (0.5, 1.0, 2.0):
            fd = central_diff(u.eval, r, 1e-5)
            assert float(u.deriv(r)) == pytest.approx(fd, rel=1e-7)

    def test_sign_mismatch_warns(self):
        with pytest.warns(UserWarning):
            extremal_profile_q(4, 1.5, 1.5, 1.0, +1.0)  # Q2 wants beta < 0

    def test_rejects_diagonal(self):
        with pytest.raises(ValueError):
            extremal_profile_q(4, 2.0, 1.0, 1.0, -1.0)


class TestHalfPowerTransform:
    def test_near_two_limit(self):
        u = extremal_profile(HYDROGEN, 1.0, 1.0)
        g = half_power_transform(u, 1.999999)
        rs = np.array([0.2, 1.0, 3.0])
        assert np.allclose(g.eval(rs), u.eval(rs), rtol=1e-5)

    def test_exponential_image(self):
        u = extremal_profile(HYDROGEN, 1.0, 1.0)
        g = half_power_transform(u, 1.5)
        rs = np.array([0.2, 1.0, 3.0])
        assert np.allclose(g.eval(rs), np.exp(-0.75 * rs), rtol=1e-14)

    def test_zero_maps_to_zero(self):
        g = half_power_transform(zero_profile(), 1.5)
        assert g.identically_zero
        assert float(g.eval(1.0)) == 0.0

    def test_sign_preserved(self):
        u = extremal_profile(HYDROGEN, -2.0, 1.0)
        g = half_power_transform(u, 1.5)
        assert float(g.eval(1.0)) < 0.0

    def test_derivative_matches_finite_difference(self):
        u = perturb_profile(extremal_profile(HYDROGEN, 1.0, 1.0), 0.3, unit_bump(0.5, 1.5))
        g = half_power_transform(u, 1.5)
        for r in (0.7, 1.0, 1.3, 2.5):
            fd = central_diff(g.eval, r, 1e-6 * r)
            assert float(g.deriv(r)) == pytest.approx(fd, rel=1e-6)

    def test_rejects_bad_exponent(self):
        with pytest.raises(ValueError):
            half_power_transform(zero_profile(), 2.5)


class TestDeriv_FiniteDifference_Sweep:
    @pytest.mark.parametrize("profile_name", ["bump", "unit_bump", "extremal",
                                              "extremal_q", "perturbed", "half_power",
                                              "dilated", "truncated"])
    def test_profile_derivatives(self, profile_name):
        base = extremal_profile(HALF_POWER_PARAMS, 1.0, 1.3)
        profiles = {
            "bump": bump_profile(0.7, 2.3, 1.5),
            "unit_bump": unit_bump(0.4, 1.9),
            "extremal": base,
            "extremal_q": extremal_profile_q(4, 1.5, 1.5, 0.8, -1.0),
            "perturbed": perturb_profile(base, 0.2, unit_bump(0.6, 2.0)),
            "half_power": half_power_transform(base, 1.5),
            "dilated": dilate_profile(base, 2.5, amplitude=0.7),
            "truncated": truncate_profile(base, (0.2, 0.4, 3.0, 5.0)),
        }
        u = profiles[profile_name]
        lo = max(u.support[0], 0.05)
        hi = min(u.support[1], 8.0)
        rs = np.linspace(lo + 0.02 * (hi - lo), hi - 0.02 * (hi - lo), 100)
        for r in rs:
            fd = central_diff(u.eval, float(r), 1e-6 * float(r))
            dv = float(u.deriv(float(r)))
            if abs(fd) < 1e-12 and abs(dv) < 1e-12:
                continue
            assert dv == pytest.approx(fd, rel=1e-6, abs=1e-10)


class TestWeightedNorm:
    def test_zero_profile(self, scheme):
        assert weighted_norm_term(zero_profile(), False, 2.0, 0.0, 3, scheme) == 0.0

    def test_exponential_mass_closed_form(self, scheme):
        u = extremal_profile(HYDROGEN, 1.0, 1.0)
        val = weighted_norm_term(u, False, 2.0, 0.0, 3, scheme)
        assert val == pytest.approx(math.pi, rel=1e-8)

    def test_weight_cancellation_on_bump(self, scheme):
        # gamma = N - 1 cancels the volume factor
        N = 4
        u = unit_bump(1.0, 2.0)
        val = weighted_norm_term(u, False, 1.5, N - 1.0, N, scheme)
        plain = integrate(lambda r: np.abs(u.eval(r)) ** 1.5, scheme, 1.0, 2.0)
        assert val == pytest.approx(sphere_area(N) * plain, rel=1e-10)

    def test_against_quadpack(self, scheme):
        u = perturb_profile(extremal_profile(HALF_POWER_PARAMS, 1.0, 1.0),
                            0.1, unit_bump(0.5, 1.5))
        for use_deriv, q, gamma in [(False, 1.5, 2.0), (True, 1.5, 1.0), (False, 2.0, 0.5)]:
            mine = weighted_norm_term(u, use_deriv, q, gamma, 3, scheme)
            other = quad_weighted_norm(u, use_deriv, q, gamma, 3)
            assert mine == pytest.approx(other, rel=1e-6)

    def test_integrability_warning(self, scheme):
        u = extremal_profile(HYDROGEN, 1.0, 1.0)
        with pytest.warns(IntegrabilityWarning):
            weighted_norm_term(u, False, 2.0, 4.0, 3, scheme)  # origin power -2

    def test_rejects_nonpositive_exponent(self, scheme):
        with pytest.raises(ValueError):
            weighted_norm_term(zero_profile(), False, 0.0, 0.0, 3, scheme)


class TestTailSoundness:
    @pytest.mark.parametrize("lam", [0.7, 1.0, 2.0])
    def test_reported_bound_covers_truncation(self, lam):
        u = extremal_profile(HALF_POWER_PARAMS, 1.0, lam)
        frozen = default_scheme(r_max=32.0, extend_tail=False)
        doubled = default_scheme(r_max=64.0, extend_tail=False)
        for use_deriv in (False, True):
            rep = weighted_norm_report(u, use_deriv, 1.5, 1.0, 3, frozen)
            far = weighted_norm_term(u, use_deriv, 1.5, 1.0, 3, doubled)
            assert rep.tail_bound >= abs(far - rep.value)

    def test_envelope_bound_covers_numeric_tail(self, scheme):
        u = extremal_profile(HALF_POWER_PARAMS, 2.0, 1.0)
        env = u.envelope
        for R in (8.0, 16.0, 32.0):
            numeric = integrate(lambda r: np.abs(u.eval(r)) ** 1.5 * r**2, scheme, R, 4096.0)
            assert env.bound(1.5, 2.0, R) >= numeric


class TestTransforms:
    def test_dilate_identity(self):
        u = bump_profile(1.0, 2.0)
        v = dilate_profile(u, 1.0)
        rs = np.linspace(0.9, 2.1, 50)
        assert np.allclose(u.eval(rs), v.eval(rs))

    def test_dilate_support(self):
        v = dilate_profile(bump_profile(1.0, 2.0), 4.0)
        assert v.support == (0.25, 0.5)

    def test_truncate_support_and_window(self):
        u = extremal_profile(HYDROGEN, 1.0, 1.0)
        t = truncate_profile(u, (0.5, 1.0, 2.0, 3.0))
        assert t.support == (0.5, 3.0)
        assert float(t.eval(0.4)) == 0.0
        assert float(t.eval(4.0)) == 0.0
        assert float(t.eval(1.5)) == pytest.approx(float(u.eval(1.5)), rel=1e-12)

    def test_truncated_profile_integrates_like_window(self, scheme):
        u = extremal_profile(HYDROGEN, 1.0, 1.0)
        t = truncate_profile(u, (0.5, 1.0, 2.0, 3.0))
        full = weighted_norm_term(t, False, 2.0, 0.0, 3, scheme)
        inner = weighted_norm_term(u, False, 2.0, 0.0, 3, scheme)
        assert 0.0 < full < inner

    def test_perturb_requires_compact_bump(self):
        u = extremal_profile(HYDROGEN, 1.0, 1.0)
        with pytest.raises(ValueError):
            perturb_profile(u, 0.1, u)


class TestEnvelope:
    def test_exactness_for_extremal(self):
        u = extremal_profile(HYDROGEN, 2.0, 1.0)
        env = u.envelope
        rs = np.array([1.0, 3.0, 10.0])
        bound = sum(a * rs**m for a, m in env.terms) * np.exp(-env.rate * rs**env.power)
        assert np.allclose(bound, np.abs(u.eval(rs)), rtol=1e-13)

    def test_monotone_in_radius(self):
        env = TailEnvelope(((2.0, 1.0),), 0.5, 1.0)
        bounds = [env.bound(1.5, 2.0, R) for R in (1.0, 2.0, 4.0, 8.0)]
        assert all(a > b for a, b in zip(bounds, bounds[1:]))
