"""Integral functionals: weighted norms, deficits, exact identities, distances.

For a profile u and parameters (N, p, a, b) the three canonical terms are

    grad  = int |grad u|^p / |x|^(pb) dx
    mass  = int |u|^p / |x|^(pa) dx
    mixed = int |u|^p / |x|^((p-1)a+b+1) dx

The scale-invariant deficit is grad^(1/p) mass^((p-1)/p) - K * mixed with
the sharp constant K; the scale-non-invariant one is grad + (p-1) mass -
|N-(p-1)a-b-1| * mixed.  Both deficits equal explicit integrals of the
Bregman gap of |.|^p (the exact identities checked by the test campaigns),
and both are bounded below by constants times the stability distances
implemented here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .params import CknParams, sharp_constant_lp
from .radial import (
    QuadratureResult,
    QuadratureScheme,
    RadialProfile,
    TailEnvelope,
    envelope_merge,
    envelope_power,
    envelope_product,
    envelope_shift,
    extremal_profile,
    half_power_transform,
    integrate_adaptive,
    needs_kink_tracking,
    rough_integral,
    sphere_area,
    weighted_norm_report,
)
from .vectorineq import bregman_gap_signed, gap_scale_signed

__all__ = [
    "ZeroProfileError",
    "CknTerms",
    "DeficitReport",
    "DistanceVariant",
    "ckn_terms",
    "invariant_deficit",
    "invariant_deficit_report",
    "noninvariant_deficit",
    "noninvariant_deficit_report",
    "noninvariant_gap_integral",
    "invariant_gap_integral",
    "stability_distance",
    "difference_norm",
    "pair_integral",
]


class ZeroProfileError(ValueError):
    """A deficit or projection was requested for the zero profile."""


@dataclass
class CknTerms:
    """The three weighted norms of one (profile, params) pair."""

    grad_term: float
    mass_term: float
    mixed_term: float
    params: CknParams
    reports: dict[str, QuadratureResult]

    def error_estimates(self) -> dict[str, float]:
        return {k: v.error_estimate for k, v in self.reports.items()}


def ckn_terms(u: RadialProfile, params: CknParams, scheme: QuadratureScheme) -> CknTerms:
    N, p = params.N, params.p
    grad = weighted_norm_report(u, True, p, params.grad_weight, N, scheme)
    mass = weighted_norm_report(u, False, p, params.mass_weight, N, scheme)
    mixed = weighted_norm_report(u, False, p, params.mixed_weight, N, scheme)
    return CknTerms(
        grad_term=grad.value, mass_term=mass.value, mixed_term=mixed.value,
        params=params, reports={"grad": grad, "mass": mass, "mixed": mixed},
    )


@dataclass
class DeficitReport:
    """A deficit value with its numerical resolution estimate.

    ``condition`` bounds the quadrature-induced uncertainty: the deficit is
    a difference of O(1) quantities, so values below ``condition`` are
    numerically indistinguishable from zero.
    """

    value: float
    condition: float
    below_resolution: bool
    constant: float
    terms: CknTerms


def _require_nonzero(u: RadialProfile) -> None:
    if u.identically_zero:
        raise ZeroProfileError(f"profile {u.label!r} is identically zero")


def invariant_deficit_report(
    u: RadialProfile,
    params: CknParams,
    scheme: QuadratureScheme,
    constant_override: float | None = None,
    terms: CknTerms | None = None,
) -> DeficitReport:
    """Deficit of the product-form inequality:

    grad^(1/p) mass^((p-1)/p) - K * mixed,  K the sharp constant unless
    overridden (e.g. with the Q-region L^2 constant).
    """
    _require_nonzero(u)
    p = params.p
    t = terms if terms is not None else ckn_terms(u, params, scheme)
    K = sharp_constant_lp(params) if constant_override is None else constant_override
    product = t.grad_term ** (1.0 / p) * t.mass_term ** ((p - 1.0) / p)
    value = product - K * t.mixed_term
    errs = t.error_estimates()
    prop = 0.0
    if t.grad_term > 0.0 and t.mass_term > 0.0:
        prop = product * (
            errs["grad"] / (p * t.grad_term) + (p - 1.0) * errs["mass"] / (p * t.mass_term)
        )
    condition = (abs(product) + K * t.mixed_term) * scheme.rel_tol + prop + K * errs["mixed"]
    return DeficitReport(value=value, condition=condition,
                         below_resolution=abs(value) <= condition,
                         constant=K, terms=t)


def invariant_deficit(
    u: RadialProfile,
    params: CknParams,
    scheme: QuadratureScheme,
    constant_override: float | None = None,
) -> float:
    return invariant_deficit_report(u, params, scheme, constant_override).value


def noninvariant_deficit_report(
    u: RadialProfile,
    params: CknParams,
    scheme: QuadratureScheme,
    terms: CknTerms | None = None,
) -> DeficitReport:
    """Deficit of the additive inequality: grad + (p-1) mass - p*K * mixed."""
    _require_nonzero(u)
    p = params.p
    t = terms if terms is not None else ckn_terms(u, params, scheme)
    K = p * sharp_constant_lp(params)  # |N - (p-1)a - b - 1|
    value = t.grad_term + (p - 1.0) * t.mass_term - K * t.mixed_term
    errs = t.error_estimates()
    magnitude = t.grad_term + (p - 1.0) * t.mass_term + K * t.mixed_term
    condition = (
        magnitude * scheme.rel_tol
        + errs["grad"] + (p - 1.0) * errs["mass"] + K * errs["mixed"]
    )
    return DeficitReport(value=value, condition=condition,
                         below_resolution=abs(value) <= condition,
                         constant=K, terms=t)


def noninvariant_deficit(u: RadialProfile, params: CknParams, scheme: QuadratureScheme) -> float:
    return noninvariant_deficit_report(u, params, scheme).value


# ---------------------------------------------------------------------------
# exact gap-integral representations of the deficits


def _gap_tail_envelope(
    u: RadialProfile, shift: float, tx: float, ty: float, p: float
) -> TailEnvelope | None:
    """Envelope for gap(tx * f r^shift, ty * f') using
    gap(X, Y) <= |Y|^p + (1+p)|X|^p + p|X|^(p-1)|Y|."""
    if u.envelope is None or u.deriv_envelope is None:
        return None
    if u.envelope.power != u.deriv_envelope.power or u.envelope.rate != u.deriv_envelope.rate:
        return None
    ex = envelope_shift(u.envelope, abs(tx), shift)
    ey = envelope_shift(u.deriv_envelope, abs(ty), 0.0)
    try:
        parts = envelope_merge(
            envelope_power(ey, p),
            envelope_merge(
                envelope_shift(envelope_power(ex, p), 1.0 + p, 0.0),
                envelope_shift(envelope_product(envelope_power(ex, p - 1.0), ey), p, 0.0),
            ),
        )
    except ValueError:
        return None
    return parts


def _gap_integral(
    u: RadialProfile,
    params: CknParams,
    scheme: QuadratureScheme,
    tx: float,
    ty: float,
) -> float:
    """sphere_area * int gap_p(-tx f r^(b-a), ty f') r^(N-1-pb) dr."""
    N, p = params.N, params.p
    shift = params.b - params.a
    w = N - 1.0 - params.grad_weight

    def args(r: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return -tx * u.eval(r) * r**shift, ty * u.deriv(r)

    def g(r: np.ndarray) -> np.ndarray:
        x, y = args(r)
        return bregman_gap_signed(x, y, p) * r**w

    def scale(r: np.ndarray) -> np.ndarray:
        x, y = args(r)
        return gap_scale_signed(x, y, p) * r**w

    lo = max(scheme.r_min, u.support[0])
    unbounded = math.isinf(u.support[1])
    hi = scheme.r_max if unbounded else u.support[1]
    # On extremal-type profiles the gap vanishes identically and the
    # integral is pure rounding noise; its floor is eps times the integral
    # of the term-magnitude scale.
    scale_int = rough_integral(scale, scheme, lo, hi)
    floor = 32.0 * float(np.finfo(float).eps) * abs(scale_int)
    env = _gap_tail_envelope(u, shift, tx, ty, p)
    tail_fn = (lambda R: env.bound(1.0, w, R)) if env is not None else None
    res = integrate_adaptive(
        g, scheme, lo, hi,
        tail_bound_fn=tail_fn,
        tail_open=unbounded,
        head=u.reaches_origin(),
        kink_fns=(u.eval, u.deriv) if needs_kink_tracking(p) else (),
        abs_floor=floor,
    )
    return sphere_area(N) * res.value


def noninvariant_gap_integral(u: RadialProfile, params: CknParams, scheme: QuadratureScheme) -> float:
    """Exact integral representation of the additive deficit:

    int gap_p(-u |x|^(b-a-1) x, grad u) / |x|^(pb) dx,

    evaluated on signed radial magnitudes (both vector arguments are
    multiples of x/|x| for radial u).
    """
    if u.identically_zero:
        return 0.0
    return _gap_integral(u, params, scheme, 1.0, 1.0)


def invariant_gap_integral(
    u: RadialProfile,
    params: CknParams,
    scheme: QuadratureScheme,
    terms: CknTerms | None = None,
) -> float:
    """Exact integral representation of the product-form deficit.

    Two-pass: the global ratio grad/mass scales the two gap arguments, then
    (1/p) int gap_p(-(grad/mass)^(1/p^2) u |x|^(b-a-1) x,
                    (mass/grad)^((p-1)/p^2) grad u) / |x|^(pb) dx.
    """
    _require_nonzero(u)
    p = params.p
    t = terms if terms is not None else ckn_terms(u, params, scheme)
    if t.grad_term <= 0.0 or t.mass_term <= 0.0:
        raise ZeroProfileError("gap integral needs nonvanishing gradient and mass terms")
    ratio = t.grad_term / t.mass_term
    tx = ratio ** (1.0 / p**2)
    ty = ratio ** (-(p - 1.0) / p**2)
    return _gap_integral(u, params, scheme, tx, ty) / p


# ---------------------------------------------------------------------------
# stability distances


class DistanceVariant(Enum):
    """Distance used on the right-hand side of a stability estimate.

    HALF_POWER*: squared mass-weighted L^2 distance between half-power
    transforms (1 < p < 2); PNORM: mass-weighted L^p distance (p >= 2);
    GRAD_MASS: gradient-weighted plus mass-weighted L^p distance (p >= 2);
    MIXED*: mixed-weight L^p distance (p >= 2).  *_PINNED variants fix the
    scale parameter of the comparison extremal to 1.
    """

    HALF_POWER = "half-power"
    HALF_POWER_PINNED = "half-power-pinned"
    PNORM = "pnorm"
    GRAD_MASS_PINNED = "grad-mass-pinned"
    MIXED_PINNED = "mixed-pinned"
    MIXED_FREE = "mixed-free"

    @property
    def pinned(self) -> bool:
        return self in (
            DistanceVariant.HALF_POWER_PINNED,
            DistanceVariant.GRAD_MASS_PINNED,
            DistanceVariant.MIXED_PINNED,
        )

    def check_exponent(self, p: float) -> None:
        if self in (DistanceVariant.HALF_POWER, DistanceVariant.HALF_POWER_PINNED):
            if not 1.0 < p < 2.0:
                raise ValueError(f"{self.value} distance needs 1 < p < 2, got p={p}")
        elif p < 2.0:
            raise ValueError(f"{self.value} distance needs p >= 2, got p={p}")


def difference_norm(
    u: RadialProfile,
    v: RadialProfile,
    exponent_q: float,
    weight_gamma: float,
    N: int,
    scheme: QuadratureScheme,
    use_derivative: bool = False,
) -> float:
    """sphere_area(N) * int |u - v|^q r^(N-1-gamma) dr over the joint support."""
    fu = u.deriv if use_derivative else u.eval
    fv = v.deriv if use_derivative else v.eval
    w = N - 1.0 - weight_gamma

    def g(r: np.ndarray) -> np.ndarray:
        return np.abs(fu(r) - fv(r)) ** exponent_q * r**w

    lo = max(scheme.r_min, min(u.support[0], v.support[0]))
    unbounded = math.isinf(u.support[1]) or math.isinf(v.support[1])
    # finite supports are covered in full; r_max only truncates the
    # infinite-support contributions, which the envelopes bound
    finite_hi = max(s for s in (u.support[1], v.support[1]) if math.isfinite(s)) \
        if not (math.isinf(u.support[1]) and math.isinf(v.support[1])) else scheme.r_max
    hi = max(scheme.r_max, finite_hi) if unbounded else finite_hi

    # The pointwise difference carries rounding noise eps * (|u| + |v|),
    # which propagates into |u - v|^q as q (d + noise)^(q-1) * noise;
    # changes below that integrated level are numerically meaningless.
    eps = 8.0 * float(np.finfo(float).eps)

    def noise(r: np.ndarray) -> np.ndarray:
        d = np.abs(fu(r) - fv(r))
        nse = eps * (np.abs(fu(r)) + np.abs(fv(r)))
        return exponent_q * (d + nse) ** (exponent_q - 1.0) * nse * r**w

    floor = abs(rough_integral(noise, scheme, lo, hi))

    envs = []
    for prof in (u, v):
        if math.isinf(prof.support[1]) and not prof.identically_zero:
            env = prof.deriv_envelope if use_derivative else prof.envelope
            if env is None:
                envs = None
                break
            envs.append(env)
    tail_fn = None
    if envs:
        factor = 2.0 ** max(0.0, exponent_q - 1.0) if len(envs) > 1 else 1.0
        tail_fn = lambda R: factor * sum(e.bound(exponent_q, w, R) for e in envs)
    res = integrate_adaptive(
        g, scheme, lo, hi,
        tail_bound_fn=tail_fn,
        tail_open=unbounded,
        head=min(u.support[0], v.support[0]) <= 0.0,
        kink_fns=((lambda r: fu(r) - fv(r)),) if needs_kink_tracking(exponent_q) else (),
        abs_floor=floor,
    )
    return sphere_area(N) * res.value


def pair_integral(
    u: RadialProfile,
    v: RadialProfile,
    weight_gamma: float,
    N: int,
    scheme: QuadratureScheme,
    use_derivative: bool = False,
    kink_fns: tuple = (),
) -> float:
    """Signed weighted pairing sphere_area(N) * int u v r^(N-1-gamma) dr.

    Used for the closed-form projection coefficient of quadratic distances.
    kink_fns marks factors with fractional-power kinks (e.g. half-power
    images of sign-changing profiles).
    """
    fu = u.deriv if use_derivative else u.eval
    fv = v.deriv if use_derivative else v.eval
    w = N - 1.0 - weight_gamma

    def g(r: np.ndarray) -> np.ndarray:
        return fu(r) * fv(r) * r**w

    lo = max(scheme.r_min, min(u.support[0], v.support[0]))
    hi_support = min(u.support[1], v.support[1])  # product vanishes past either support
    unbounded = math.isinf(hi_support)
    hi = scheme.r_max if unbounded else hi_support
    tail_fn = None
    eu = u.deriv_envelope if use_derivative else u.envelope
    ev = v.deriv_envelope if use_derivative else v.envelope
    if unbounded and eu is not None and ev is not None:
        try:
            env = envelope_product(eu, ev)
            tail_fn = lambda R: env.bound(1.0, w, R)
        except ValueError:
            tail_fn = None
    res = integrate_adaptive(
        g, scheme, lo, hi,
        tail_bound_fn=tail_fn,
        tail_open=unbounded,
        head=min(u.support[0], v.support[0]) <= 0.0,
        kink_fns=kink_fns,
    )
    return sphere_area(N) * res.value


def stability_distance(
    u: RadialProfile,
    params: CknParams,
    variant: DistanceVariant,
    c: float,
    lam: float,
    scheme: QuadratureScheme,
) -> float:
    """Distance from u to the extremal with parameters (c, lam), per variant.

    Pinned variants require lam = 1 exactly.
    """
    p, N = params.p, params.N
    variant.check_exponent(p)
    if variant.pinned and lam != 1.0:
        raise ValueError(f"{variant.value} pins the scale parameter to 1, got lam={lam}")
    v = extremal_profile(params, c, lam)
    if variant in (DistanceVariant.HALF_POWER, DistanceVariant.HALF_POWER_PINNED):
        hu = half_power_transform(u, p)
        hv = half_power_transform(v, p)
        return difference_norm(hu, hv, 2.0, params.mass_weight, N, scheme)
    if variant is DistanceVariant.PNORM:
        return difference_norm(u, v, p, params.mass_weight, N, scheme)
    if variant is DistanceVariant.GRAD_MASS_PINNED:
        return difference_norm(u, v, p, params.grad_weight, N, scheme, use_derivative=True) + \
            difference_norm(u, v, p, params.mass_weight, N, scheme)
    if variant in (DistanceVariant.MIXED_PINNED, DistanceVariant.MIXED_FREE):
        return difference_norm(u, v, p, params.mixed_weight, N, scheme)
    raise ValueError(f"unknown variant {variant!r}")
