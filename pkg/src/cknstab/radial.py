"""Radial profiles and adaptive weighted quadrature on (0, inf).

Every N-dimensional integral evaluated by this package has a radial
integrand, so it reduces exactly to a 1-D integral:

    int_{R^N} W(|x|) dx  =  sphere_area(N) * int_0^inf W(r) r^(N-1) dr.

This module supplies the 1-D machinery: profile construction with analytic
derivatives (numerical differentiation is never used outside test oracles),
panel-wise Gauss-Legendre quadrature with global refinement, an analytic
head correction for the cutoff at r_min, and envelope-driven tail bounds
with automatic extension of the truncation radius r_max.

Tail envelopes encode bounds of the form

    |f(r)| <= sum_i A_i r^(m_i) * exp(-rate * r^power)    for r >= valid_from,

which integrate in closed form against power weights via upper incomplete
gamma functions; all stretched-exponential profiles used here carry one.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.special import gammaincc, roots_legendre

__all__ = [
    "AccuracyError",
    "NonFiniteIntegrandError",
    "IntegrabilityWarning",
    "TailEnvelope",
    "RadialProfile",
    "QuadratureScheme",
    "QuadratureResult",
    "sphere_area",
    "default_scheme",
    "integrate",
    "integrate_report",
    "integrate_adaptive",
    "weighted_norm_term",
    "weighted_norm_report",
    "bump_profile",
    "unit_bump",
    "extremal_profile",
    "extremal_profile_q",
    "half_power_transform",
    "perturb_profile",
    "dilate_profile",
    "truncate_profile",
    "zero_profile",
    "envelope_power",
    "envelope_product",
    "envelope_shift",
    "envelope_merge",
]


class AccuracyError(RuntimeError):
    """Quadrature refinement hit its cap before reaching the tolerance."""


class NonFiniteIntegrandError(ValueError):
    """The integrand produced NaN or infinity at a quadrature node."""


class IntegrabilityWarning(UserWarning):
    """The integrand is not (or barely) integrable at the origin."""


def sphere_area(N: int) -> float:
    """Surface area of the unit sphere in R^N: 2 pi^(N/2) / Gamma(N/2)."""
    if N < 1:
        raise ValueError("dimension must be >= 1")
    return 2.0 * math.pi ** (N / 2.0) / math.gamma(N / 2.0)


# ---------------------------------------------------------------------------
# tail envelopes


def _power_exp_tail(s: float, c: float, theta: float, R: float) -> float:
    """Upper bound for int_R^inf r^s exp(-c r^theta) dr (exact for s+1 > 0)."""
    if c <= 0.0 or theta <= 0.0:
        return math.inf
    a = (s + 1.0) / theta
    if a <= 0.0:
        # r^s is decreasing past R; freeze it at R^s.
        return R**s * _power_exp_tail(0.0, c, theta, R)
    x = c * R**theta
    if a > 170.0:
        # gamma overflows; fall back to a crude geometric-style bound.
        return R ** (s + 1.0) * math.exp(-x) * max(1.0, a / max(x - a, 1e-9))
    return math.gamma(a) * float(gammaincc(a, x)) * c ** (-a) / theta


@dataclass(frozen=True)
class TailEnvelope:
    """Monomial-exponential upper bound on |f| valid for r >= valid_from.

    ``exact=True`` means |f| equals the (single-term) envelope there, which
    licenses lower bounds on |f| in derived envelopes.
    """

    terms: tuple[tuple[float, float], ...]  # (amplitude, power) pairs
    rate: float
    power: float
    valid_from: float = 0.0
    exact: bool = False

    def bound(self, q: float, extra_power: float, r_from: float) -> float:
        """Bound int_{r_from}^inf (sum_i A_i r^m_i)^q e^(-q rate r^power) r^extra dr."""
        if r_from < self.valid_from:
            return math.inf
        n = len(self.terms)
        overhead = float(n) ** (q - 1.0) if (q > 1.0 and n > 1) else 1.0
        total = 0.0
        for amp, m in self.terms:
            if amp == 0.0:
                continue
            total += abs(amp) ** q * _power_exp_tail(
                m * q + extra_power, q * self.rate, self.power, r_from
            )
        return overhead * total


def envelope_power(env: TailEnvelope, q: float) -> TailEnvelope:
    """Envelope of |f|^q given an envelope of |f|."""
    n = len(env.terms)
    overhead = float(n) ** (q - 1.0) if (q > 1.0 and n > 1) else 1.0
    terms = tuple((overhead * abs(a) ** q, m * q) for a, m in env.terms)
    return TailEnvelope(terms, env.rate * q, env.power, env.valid_from,
                        exact=env.exact and n == 1)


def envelope_product(e1: TailEnvelope, e2: TailEnvelope) -> TailEnvelope:
    """Envelope of a product; requires matching stretch powers."""
    if e1.power != e2.power:
        raise ValueError("envelope product needs identical stretch powers")
    terms = tuple((a1 * a2, m1 + m2) for a1, m1 in e1.terms for a2, m2 in e2.terms)
    return TailEnvelope(terms, e1.rate + e2.rate, e1.power,
                        max(e1.valid_from, e2.valid_from), exact=False)


def envelope_shift(env: TailEnvelope, amp_factor: float, power_shift: float) -> TailEnvelope:
    """Envelope of amp_factor * r^power_shift * f."""
    terms = tuple((abs(amp_factor) * a, m + power_shift) for a, m in env.terms)
    return TailEnvelope(terms, env.rate, env.power, env.valid_from, exact=env.exact)


def envelope_merge(e1: TailEnvelope, e2: TailEnvelope) -> TailEnvelope:
    """Envelope of a sum |f1| + |f2| with a common decay rate."""
    if e1.power != e2.power or e1.rate != e2.rate:
        raise ValueError("envelope merge needs identical rates")
    return TailEnvelope(e1.terms + e2.terms, e1.rate, e1.power,
                        max(e1.valid_from, e2.valid_from), exact=False)


# ---------------------------------------------------------------------------
# radial profiles


@dataclass(frozen=True)
class RadialProfile:
    """A radial function f(r) with analytic derivative and support window.

    eval/deriv return exactly 0 outside [support[0], support[1]].  The
    optional envelopes bound |f| and |f'| for large r; origin powers give
    the leading local exponents f ~ A r^m near 0 (None when the profile
    vanishes identically near the origin).
    """

    fn: Callable[[np.ndarray], np.ndarray]
    dfn: Callable[[np.ndarray], np.ndarray]
    support: tuple[float, float]
    label: str = ""
    envelope: TailEnvelope | None = None
    deriv_envelope: TailEnvelope | None = None
    origin_power: float | None = None
    deriv_origin_power: float | None = None
    identically_zero: bool = False
    recipe: dict = field(default_factory=dict)

    def _masked(self, fn: Callable, r) -> np.ndarray:
        arr = np.asarray(r, dtype=float)
        scalar = arr.ndim == 0
        arr = np.atleast_1d(arr)
        lo, hi = self.support
        inside = (arr > lo) & (arr <= hi) if lo > 0.0 else (arr > 0.0) & (arr <= hi)
        out = np.zeros_like(arr)
        if inside.any():
            out[inside] = fn(arr[inside])
        return out[0] if scalar else out

    def eval(self, r) -> np.ndarray:
        return self._masked(self.fn, r)

    def deriv(self, r) -> np.ndarray:
        return self._masked(self.dfn, r)

    def reaches_origin(self) -> bool:
        return self.support[0] <= 0.0

    def unbounded(self) -> bool:
        return math.isinf(self.support[1])

    def with_label(self, label: str) -> "RadialProfile":
        return replace(self, label=label)


def zero_profile(label: str = "zero") -> RadialProfile:
    z = lambda r: np.zeros_like(r)
    return RadialProfile(fn=z, dfn=z, support=(0.0, math.inf), label=label,
                         envelope=TailEnvelope(((0.0, 0.0),), 1.0, 1.0),
                         deriv_envelope=TailEnvelope(((0.0, 0.0),), 1.0, 1.0),
                         origin_power=0.0, deriv_origin_power=0.0,
                         identically_zero=True, recipe={"kind": "zero"})


def bump_profile(r0: float, r1: float, amplitude: float = 1.0) -> RadialProfile:
    """Smooth bump A exp(-1/((r-r0)(r1-r))) on (r0, r1), zero outside.

    All derivatives vanish at the endpoints, so the profile is C^infinity
    on (0, inf) and compactly supported away from the origin.
    """
    if not 0.0 < r0 < r1:
        raise ValueError(f"need 0 < r0 < r1, got ({r0}, {r1})")

    def fn(r: np.ndarray) -> np.ndarray:
        phi = (r - r0) * (r1 - r)
        with np.errstate(over="ignore", divide="ignore"):
            return np.where(phi > 0.0, amplitude * np.exp(-1.0 / np.maximum(phi, 1e-300)), 0.0)

    def dfn(r: np.ndarray) -> np.ndarray:
        phi = (r - r0) * (r1 - r)
        good = phi > 0.0
        out = np.zeros_like(r)
        if good.any():
            ph = phi[good]
            # d/dr exp(-1/phi) = exp(-1/phi) * phi' / phi^2; the exponential
            # wins against the 1/phi^2 blow-up at the endpoints.
            out[good] = amplitude * np.exp(-1.0 / ph) * (r0 + r1 - 2.0 * r[good]) / ph**2
        return out

    return RadialProfile(
        fn=fn, dfn=dfn, support=(r0, r1),
        label=f"bump[{r0:g},{r1:g}]x{amplitude:g}",
        identically_zero=(amplitude == 0.0),
        recipe={"kind": "bump", "r0": r0, "r1": r1, "amplitude": amplitude},
    )


def unit_bump(r0: float, r1: float, amplitude: float = 1.0) -> RadialProfile:
    """Bump with peak value exactly `amplitude` at the midpoint.

    The raw mollifier peaks at exp(-4/(r1-r0)^2), which collapses for
    narrow supports; here the exponent is shifted so it is always <= 0:
    f(r) = amplitude * exp(4/(r1-r0)^2 - 1/((r-r0)(r1-r))).
    """
    if not 0.0 < r0 < r1:
        raise ValueError(f"need 0 < r0 < r1, got ({r0}, {r1})")
    peak = 4.0 / (r1 - r0) ** 2

    def fn(r: np.ndarray) -> np.ndarray:
        phi = (r - r0) * (r1 - r)
        with np.errstate(divide="ignore"):
            return np.where(
                phi > 0.0,
                amplitude * np.exp(peak - 1.0 / np.maximum(phi, 1e-300)),
                0.0,
            )

    def dfn(r: np.ndarray) -> np.ndarray:
        phi = (r - r0) * (r1 - r)
        good = phi > 0.0
        out = np.zeros_like(r)
        if good.any():
            ph = phi[good]
            out[good] = (
                amplitude * np.exp(peak - 1.0 / ph) * (r0 + r1 - 2.0 * r[good]) / ph**2
            )
        return out

    return RadialProfile(
        fn=fn, dfn=dfn, support=(r0, r1),
        label=f"ubump[{r0:g},{r1:g}]",
        identically_zero=(amplitude == 0.0),
        recipe={"kind": "unit_bump", "r0": r0, "r1": r1, "amplitude": amplitude},
    )


def extremal_profile(params, c: float, lam: float) -> RadialProfile:
    """Member of the extremal family: c * exp(-r^theta / (theta lam^theta)).

    theta = b - a + 1 must be positive and lam > 0.  The derivative is
    f'(r) = -f(r) r^(theta-1) / lam^theta.
    """
    theta = params.manifold_power
    if theta <= 0.0:
        raise ValueError(f"extremal family needs b - a + 1 > 0, got {theta}")
    if lam <= 0.0:
        raise ValueError(f"scale parameter must be positive, got {lam}")
    kappa = 1.0 / (theta * lam**theta)
    slope = 1.0 / lam**theta  # kappa * theta

    def fn(r: np.ndarray) -> np.ndarray:
        return c * np.exp(-kappa * r**theta)

    def dfn(r: np.ndarray) -> np.ndarray:
        return -c * slope * r ** (theta - 1.0) * np.exp(-kappa * r**theta)

    return RadialProfile(
        fn=fn, dfn=dfn, support=(0.0, math.inf),
        label=f"extremal(c={c:g},lam={lam:g})",
        envelope=TailEnvelope(((abs(c), 0.0),), kappa, theta, exact=True),
        deriv_envelope=TailEnvelope(((abs(c) * slope, theta - 1.0),), kappa, theta, exact=True),
        origin_power=0.0, deriv_origin_power=theta - 1.0,
        identically_zero=(c == 0.0),
        recipe={"kind": "extremal", "c": c, "lam": lam},
    )


def extremal_profile_q(N: int, a: float, b: float, alpha: float, beta: float) -> RadialProfile:
    """Power-exponential family: alpha r^(2(b+1)-N) exp(beta r^theta / theta).

    Attains the Q-region L^2 constant for the region-matching sign of beta
    (beta > 0 in Q1, beta < 0 in Q2); a sign mismatch warns but constructs.
    """
    theta = b - a + 1.0
    if theta == 0.0:
        raise ValueError("power-exponential family undefined on the diagonal a = b + 1")
    from .params import Region, classify_region

    region = classify_region(N, a, b)
    expected = {Region.Q1: 1.0, Region.Q2: -1.0}.get(region)
    if expected is not None and beta != 0.0 and math.copysign(1.0, beta) != expected:
        warnings.warn(
            f"beta sign {math.copysign(1.0, beta):+.0f} does not match region {region.value}",
            UserWarning, stacklevel=2,
        )
    gam = 2.0 * (b + 1.0) - N
    coef = beta / theta

    def fn(r: np.ndarray) -> np.ndarray:
        return alpha * r**gam * np.exp(coef * r**theta)

    def dfn(r: np.ndarray) -> np.ndarray:
        return alpha * (gam * r ** (gam - 1.0) + beta * r ** (gam + theta - 1.0)) * np.exp(coef * r**theta)

    decays = (theta > 0.0 and beta < 0.0)
    env = denv = None
    origin = gam
    dorigin = gam - 1.0 if gam != 0.0 else gam + theta - 1.0
    if decays:
        kappa = -coef
        env = TailEnvelope(((abs(alpha), gam),), kappa, theta, exact=True)
        denv = TailEnvelope(
            ((abs(alpha * gam), gam - 1.0), (abs(alpha * beta), gam + theta - 1.0)),
            kappa, theta,
        )
    if theta < 0.0:
        # exp(coef r^theta) -> 0 rapidly as r -> 0 when coef < 0: the profile
        # vanishes near the origin and has only a power-law tail.
        origin = dorigin = None

    return RadialProfile(
        fn=fn, dfn=dfn, support=(0.0, math.inf),
        label=f"extremal_q(alpha={alpha:g},beta={beta:g})",
        envelope=env, deriv_envelope=denv,
        origin_power=origin, deriv_origin_power=dorigin,
        identically_zero=(alpha == 0.0),
        recipe={"kind": "extremal_q", "N": N, "a": a, "b": b, "alpha": alpha, "beta": beta},
    )


def half_power_transform(u: RadialProfile, p: float) -> RadialProfile:
    """The nonlinear transform f -> sign(f) |f|^(p/2) for 1 < p < 2.

    Derivative (p/2) |f|^((p-2)/2) f' where f != 0, and 0 where f = 0;
    evaluated through logs to dodge the 0^negative intermediate.
    """
    if not 1.0 < p < 2.0:
        raise ValueError(f"half-power transform needs 1 < p < 2, got p={p}")
    half = p / 2.0

    def fn(r: np.ndarray) -> np.ndarray:
        v = u.fn(r)
        return np.sign(v) * np.abs(v) ** half

    def dfn(r: np.ndarray) -> np.ndarray:
        v = u.fn(r)
        dv = u.dfn(r)
        out = np.zeros_like(v)
        mask = (v != 0.0) & (dv != 0.0)
        if mask.any():
            out[mask] = (
                half
                * np.sign(dv[mask])
                * np.exp((half - 1.0) * np.log(np.abs(v[mask])) + np.log(np.abs(dv[mask])))
            )
        return out

    env = envelope_power(u.envelope, half) if u.envelope is not None else None
    denv = None
    if (
        u.envelope is not None
        and u.envelope.exact
        and len(u.envelope.terms) == 1
        and u.deriv_envelope is not None
    ):
        # |f|^(p/2-1) |f'| needs an exact lower form for |f|; single exact term only.
        amp, m = u.envelope.terms[0]
        if amp > 0.0:
            lowered = TailEnvelope(((half * amp ** (half - 1.0), m * (half - 1.0)),),
                                   u.envelope.rate * (half - 1.0), u.envelope.power,
                                   u.envelope.valid_from)
            denv = envelope_product(
                TailEnvelope(lowered.terms, lowered.rate, u.deriv_envelope.power,
                             lowered.valid_from),
                u.deriv_envelope,
            )
    return RadialProfile(
        fn=fn, dfn=dfn, support=u.support,
        label=f"halfpow({u.label},p={p:g})",
        envelope=env, deriv_envelope=denv,
        origin_power=None if u.origin_power is None else u.origin_power * half,
        deriv_origin_power=None,
        identically_zero=u.identically_zero,
        recipe={"kind": "half_power", "p": p, "base": u.recipe},
    )


def perturb_profile(base: RadialProfile, eps: float, bump: RadialProfile) -> RadialProfile:
    """Multiplicative perturbation base * (1 + eps * bump).

    The bump must be compactly supported away from the origin, so beyond its
    support the perturbed profile coincides with the base and inherits the
    base's tail envelopes exactly.
    """
    if bump.support[0] <= 0.0 or math.isinf(bump.support[1]):
        raise ValueError("perturbation must have compact support away from 0")

    def fn(r: np.ndarray) -> np.ndarray:
        return base.fn(r) * (1.0 + eps * bump.eval(r))

    def dfn(r: np.ndarray) -> np.ndarray:
        return base.dfn(r) * (1.0 + eps * bump.eval(r)) + base.fn(r) * eps * bump.deriv(r)

    cut = bump.support[1]
    env = denv = None
    if base.envelope is not None:
        env = replace(base.envelope, valid_from=max(base.envelope.valid_from, cut))
    if base.deriv_envelope is not None:
        denv = replace(base.deriv_envelope, valid_from=max(base.deriv_envelope.valid_from, cut))
    return RadialProfile(
        fn=fn, dfn=dfn, support=base.support,
        label=f"{base.label}*(1+{eps:g}*{bump.label})",
        envelope=env, deriv_envelope=denv,
        origin_power=base.origin_power, deriv_origin_power=base.deriv_origin_power,
        identically_zero=base.identically_zero,
        recipe={"kind": "perturbed", "eps": eps, "base": base.recipe, "bump": bump.recipe},
    )


def dilate_profile(u: RadialProfile, lam: float, amplitude: float = 1.0) -> RadialProfile:
    """amplitude * f(lam r) with analytically scaled derivative and support."""
    if lam <= 0.0:
        raise ValueError(f"dilation factor must be positive, got {lam}")

    def fn(r: np.ndarray) -> np.ndarray:
        return amplitude * u.fn(lam * r)

    def dfn(r: np.ndarray) -> np.ndarray:
        return amplitude * lam * u.dfn(lam * r)

    def scale_env(env: TailEnvelope | None, extra: float) -> TailEnvelope | None:
        if env is None:
            return None
        terms = tuple((abs(amplitude) * extra * a * lam**m, m) for a, m in env.terms)
        return TailEnvelope(terms, env.rate * lam**env.power, env.power,
                            env.valid_from / lam, exact=env.exact)

    return RadialProfile(
        fn=fn, dfn=dfn,
        support=(u.support[0] / lam, u.support[1] / lam),
        label=f"dilate({u.label},lam={lam:g})",
        envelope=scale_env(u.envelope, 1.0),
        deriv_envelope=scale_env(u.deriv_envelope, lam),
        origin_power=u.origin_power, deriv_origin_power=u.deriv_origin_power,
        identically_zero=u.identically_zero or amplitude == 0.0,
        recipe={"kind": "dilated", "lam": lam, "amplitude": amplitude, "base": u.recipe},
    )


def _smoothstep(t: np.ndarray) -> np.ndarray:
    """C^infinity step: 0 for t <= 0, 1 for t >= 1."""
    lo = np.clip(t, 1e-12, 1.0 - 1e-12)
    with np.errstate(over="ignore"):
        s = np.exp(-1.0 / lo)
        sb = np.exp(-1.0 / (1.0 - lo))
    out = s / (s + sb)
    return np.where(t <= 0.0, 0.0, np.where(t >= 1.0, 1.0, out))


def _smoothstep_deriv(t: np.ndarray) -> np.ndarray:
    inside = (t > 0.0) & (t < 1.0)
    out = np.zeros_like(t)
    if inside.any():
        x = t[inside]
        s = np.exp(-1.0 / x)
        sb = np.exp(-1.0 / (1.0 - x))
        ds = s / x**2
        dsb = -sb / (1.0 - x) ** 2
        out[inside] = (ds * (s + sb) - s * (ds + dsb)) / (s + sb) ** 2
    return out


def truncate_profile(u: RadialProfile, cuts: tuple[float, float, float, float]) -> RadialProfile:
    """Multiply by a smooth window: 0 below s0 and above s3, 1 on [s1, s2].

    Gives a strictly compactly supported (away from the origin) version of a
    profile for experiments that demand literal compact support.
    """
    s0, s1, s2, s3 = cuts
    if not (0.0 < s0 < s1 < s2 < s3):
        raise ValueError(f"cuts must satisfy 0 < s0 < s1 < s2 < s3, got {cuts}")

    def window(r: np.ndarray) -> np.ndarray:
        return _smoothstep((r - s0) / (s1 - s0)) * _smoothstep((s3 - r) / (s3 - s2))

    def dwindow(r: np.ndarray) -> np.ndarray:
        up = _smoothstep((r - s0) / (s1 - s0))
        dn = _smoothstep((s3 - r) / (s3 - s2))
        dup = _smoothstep_deriv((r - s0) / (s1 - s0)) / (s1 - s0)
        ddn = -_smoothstep_deriv((s3 - r) / (s3 - s2)) / (s3 - s2)
        return dup * dn + up * ddn

    def fn(r: np.ndarray) -> np.ndarray:
        return u.fn(r) * window(r)

    def dfn(r: np.ndarray) -> np.ndarray:
        return u.dfn(r) * window(r) + u.fn(r) * dwindow(r)

    lo = max(u.support[0], s0)
    hi = min(u.support[1], s3)
    return RadialProfile(
        fn=fn, dfn=dfn, support=(lo, hi),
        label=f"trunc({u.label})",
        identically_zero=u.identically_zero,
        recipe={"kind": "truncated", "cuts": list(cuts), "base": u.recipe},
    )


# ---------------------------------------------------------------------------
# quadrature


@dataclass(frozen=True)
class QuadratureScheme:
    """Panelization of (0, inf): log-spaced edges, Gauss-Legendre per panel.

    panel_edges lie strictly inside (r_min, r_max] with the last edge equal
    to r_max; the first panel is [r_min, panel_edges[0]].  Refinement splits
    every panel at its geometric midpoint until two successive estimates
    agree to rel_tol, up to max_refinements.
    """

    panel_edges: tuple[float, ...]
    nodes_per_panel: int = 32
    r_min: float = 1e-10
    r_max: float = 64.0
    rel_tol: float = 1e-10
    max_refinements: int = 8
    extend_tail: bool = True
    max_r_max: float = 1e8
    track_kinks: bool = True
    strict: bool = True  # raise AccuracyError when refinement stalls

    def __post_init__(self) -> None:
        if not self.panel_edges:
            raise ValueError("panel_edges must be nonempty")
        if self.r_min <= 0.0 or self.r_min >= self.panel_edges[0]:
            raise ValueError("need 0 < r_min < panel_edges[0]")
        if self.panel_edges[-1] != self.r_max:
            raise ValueError("last panel edge must equal r_max")
        if any(b <= a for a, b in zip(self.panel_edges, self.panel_edges[1:])):
            raise ValueError("panel_edges must be strictly increasing")


def default_scheme(
    rel_tol: float = 1e-10,
    r_min: float = 1e-10,
    r_max: float = 64.0,
    panels_per_decade: float = 4.0,
    nodes_per_panel: int = 32,
    extend_tail: bool = True,
) -> QuadratureScheme:
    decades = math.log10(r_max / r_min)
    n_edges = max(2, int(math.ceil(decades * panels_per_decade)))
    edges = np.geomspace(r_min, r_max, n_edges + 1)[1:]
    edges[-1] = r_max
    return QuadratureScheme(
        panel_edges=tuple(float(e) for e in edges),
        nodes_per_panel=nodes_per_panel,
        r_min=r_min,
        r_max=r_max,
        rel_tol=rel_tol,
        extend_tail=extend_tail,
    )


@lru_cache(maxsize=16)
def _gl_rule(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = roots_legendre(n)
    return np.asarray(x), np.asarray(w)


@dataclass
class QuadratureResult:
    value: float
    abs_integral: float
    rel_change: float
    refinements: int
    panels: int
    converged: bool
    head_correction: float = 0.0
    tail_bound: float = 0.0
    tail_note: str = ""
    r_max_used: float = 0.0

    @property
    def error_estimate(self) -> float:
        return self.rel_change * max(abs(self.value), self.abs_integral) + self.tail_bound


def _compose_panels(g: Callable, edges: np.ndarray, n: int) -> tuple[float, float]:
    """Gauss-Legendre over consecutive panels; returns (integral, integral of |g|)."""
    x, w = _gl_rule(n)
    a = edges[:-1][:, None]
    b = edges[1:][:, None]
    nodes = 0.5 * (b - a) * x[None, :] + 0.5 * (b + a)
    vals = np.asarray(g(nodes.ravel()), dtype=float).reshape(nodes.shape)
    if not np.all(np.isfinite(vals)):
        bad = nodes.ravel()[~np.isfinite(vals.ravel())][0]
        raise NonFiniteIntegrandError(f"integrand is not finite at r = {bad!r}")
    half = 0.5 * (b - a)
    return float(np.sum(half * vals * w[None, :])), float(np.sum(half * np.abs(vals) * w[None, :]))


def _split_edges(edges: np.ndarray) -> np.ndarray:
    mids = np.sqrt(edges[:-1] * edges[1:])  # geometric midpoints (edges > 0)
    out = np.empty(2 * len(edges) - 1)
    out[0::2] = edges
    out[1::2] = mids
    return out


def _refine(
    g: Callable, edges: np.ndarray, scheme: QuadratureScheme, abs_floor: float = 0.0
) -> tuple[float, float, float, int, int, bool]:
    value, absint = _compose_panels(g, edges, scheme.nodes_per_panel)
    rel_change = math.inf
    rounds = 0
    for rounds in range(1, scheme.max_refinements + 1):
        edges = _split_edges(edges)
        new, absint = _compose_panels(g, edges, scheme.nodes_per_panel)
        delta = abs(new - value)
        scale = max(abs(new), 1e-3 * absint, 1e-300)
        rel_change = delta / scale
        value = new
        if rel_change <= scheme.rel_tol or delta <= abs_floor:
            # second clause: the remaining changes sit below the caller's
            # cancellation noise floor, so further refinement is meaningless
            return value, absint, rel_change, rounds, len(edges) - 1, True
    return value, absint, rel_change, rounds, len(edges) - 1, False


def _clip_edges(scheme: QuadratureScheme, lo: float, hi: float) -> np.ndarray:
    base = np.asarray((scheme.r_min,) + scheme.panel_edges)
    inner = base[(base > lo) & (base < hi)]
    top = float(base[-1])
    if hi > top and top > lo:
        # domain reaches past the scheme's grid (e.g. a strongly dilated
        # compact support); extend with the same log density
        n = max(1, int(math.ceil(4.0 * math.log10(hi / max(top, lo)))))
        ext = np.geomspace(max(top, lo), hi, n + 1)[1:-1]
        inner = np.concatenate([inner, ext])
    return np.concatenate(([lo], inner, [hi]))


def needs_kink_tracking(q: float) -> bool:
    """|h|^q is C^infinity across zeros of h only for even integer q."""
    return not (q == int(q) and int(q) % 2 == 0)


def _find_crossings(
    h: Callable[[np.ndarray], np.ndarray], lo: float, hi: float, n_scan: int = 1536
) -> list[float]:
    """Locate sign changes of h on [lo, hi] by log-grid scan + bisection."""
    if hi <= lo:
        return []
    rs = np.geomspace(lo, hi, n_scan)
    vals = np.asarray(h(rs), dtype=float)
    vals = np.where(np.isfinite(vals), vals, 0.0)
    out = [float(r) for r in rs[1:-1][vals[1:-1] == 0.0]]
    sgn = np.sign(vals)
    idx = np.flatnonzero(sgn[:-1] * sgn[1:] < 0.0)
    if idx.size:
        a = rs[idx].copy()
        b = rs[idx + 1].copy()
        fa = vals[idx].copy()
        for _ in range(60):
            m = np.sqrt(a * b)
            fm = np.asarray(h(m), dtype=float)
            go_left = fa * fm <= 0.0
            b = np.where(go_left, m, b)
            a = np.where(go_left, a, m)
            fa = np.where(go_left, fa, fm)
            if np.all(b - a <= 1e-13 * b):
                break
        out.extend(float(x) for x in np.sqrt(a * b))
    return sorted(set(out))


_GRADE_LEVELS = 18
_GRADE_RATIO = 4.0


def _graded_edges(edges: np.ndarray, crossings: list[float]) -> np.ndarray:
    """Insert crossing points plus geometrically graded edges around each.

    Fractional-power kinks |r - rc|^q are tamed by panels shrinking
    geometrically into rc; the innermost cells are ~4^-18 of the local
    panel width, leaving a negligible residual.
    """
    lo, hi = edges[0], edges[-1]
    pts = set(float(e) for e in edges)
    for rc in crossings:
        if not lo < rc < hi:
            continue
        wl = rc - lo
        wr = hi - rc
        pts.add(rc)
        for k in range(1, _GRADE_LEVELS + 1):
            step = _GRADE_RATIO**-k
            left = rc - wl * step
            right = rc + wr * step
            if left > lo:
                pts.add(left)
            if right < hi:
                pts.add(right)
    return np.asarray(sorted(pts))


def _extension_edges(hi: float, new_hi: float, per_octave: int = 3) -> np.ndarray:
    return np.geomspace(hi, new_hi, per_octave + 1)


def integrate_adaptive(
    g: Callable[[np.ndarray], np.ndarray],
    scheme: QuadratureScheme,
    lo: float,
    hi: float,
    tail_bound_fn: Callable[[float], float] | None = None,
    tail_open: bool = False,
    head: bool = False,
    strict: bool = True,
    kink_fns: tuple[Callable[[np.ndarray], np.ndarray], ...] = (),
    abs_floor: float = 0.0,
) -> QuadratureResult:
    """Adaptive integral of g over [lo, hi], with head and tail accounting.

    head=True adds the analytic power-law correction for the cut [0, lo]:
    the local exponent nu is measured from g near lo and the correction is
    g(lo) * lo / (nu + 1).  tail_open=True means the true domain extends
    beyond hi; the truncation radius is then doubled until the envelope
    bound (or, lacking one, the last chunk magnitude) drops below
    tolerance, up to scheme.max_r_max.  kink_fns are signed functions whose
    zero crossings mark fractional-power kinks of g; panel edges are graded
    into each crossing.  abs_floor is the caller's estimate of the
    cancellation noise in the integral; values below it count as zero for
    convergence purposes (integrands that vanish identically up to rounding
    would otherwise never satisfy a relative criterion).
    """
    if hi <= lo:
        return QuadratureResult(0.0, 0.0, 0.0, 0, 0, True, r_max_used=hi)
    edges = _clip_edges(scheme, lo, hi)
    if kink_fns and scheme.track_kinks:
        crossings: list[float] = []
        for fn in kink_fns:
            crossings.extend(_find_crossings(fn, lo, hi))
        if crossings:
            edges = _graded_edges(edges, crossings)
    value, absint, rel_change, rounds, panels, converged = _refine(g, edges, scheme, abs_floor)
    if not converged and strict and scheme.strict:
        raise AccuracyError(
            f"quadrature did not reach rel_tol={scheme.rel_tol:g} "
            f"after {scheme.max_refinements} refinements (last change {rel_change:.3g})"
        )

    head_corr = 0.0
    if head:
        # Extend the lower cutoff geometrically until the remaining head,
        # modelled as a local power law g ~ A r^nu, is negligible; then add
        # the model value of the residual cut [0, lo].
        for _ in range(12):
            g0, g1 = (float(np.asarray(g(np.array([lo])))[0]),
                      float(np.asarray(g(np.array([4.0 * lo])))[0]))
            if g0 <= 0.0 or g1 <= 0.0:
                break
            nu = math.log(g1 / g0) / math.log(4.0)
            if nu <= -0.999:
                warnings.warn(
                    f"integrand behaves like r^{nu:.3f} near the origin; "
                    "the head of the integral is unreliable",
                    IntegrabilityWarning, stacklevel=2,
                )
                break
            model = g0 * lo / (nu + 1.0)
            if model <= scheme.rel_tol * max(abs(value), absint) * 0.1 + abs_floor or lo <= 1e-60:
                head_corr += model
                value += model
                break
            new_lo = lo / 64.0
            chunk, chunk_abs = _compose_panels(
                g, np.geomspace(new_lo, lo, 7), scheme.nodes_per_panel
            )
            value += chunk
            absint += chunk_abs
            head_corr += chunk
            lo = new_lo

    tail_bound = 0.0
    tail_note = ""
    if tail_open:
        floor = max(scheme.rel_tol**2 * max(1.0, absint), abs_floor)
        if tail_bound_fn is not None:
            tail_bound = tail_bound_fn(hi)
            while (
                scheme.extend_tail
                and hi < scheme.max_r_max
                and tail_bound > scheme.rel_tol * max(absint, abs(value)) + floor
            ):
                new_hi = min(2.0 * hi, scheme.max_r_max)
                chunk, chunk_abs = _compose_panels(
                    g, _extension_edges(hi, new_hi), scheme.nodes_per_panel
                )
                value += chunk
                absint += chunk_abs
                hi = new_hi
                tail_bound = tail_bound_fn(hi)
            tail_note = "envelope"
        else:
            # No analytic envelope: double until two consecutive chunks are
            # negligible, and report the last chunk size as the (heuristic)
            # remainder estimate.
            quiet = 0
            chunk_abs = math.inf
            while scheme.extend_tail and hi < scheme.max_r_max and quiet < 2:
                new_hi = min(2.0 * hi, scheme.max_r_max)
                chunk, chunk_abs = _compose_panels(
                    g, _extension_edges(hi, new_hi), scheme.nodes_per_panel
                )
                value += chunk
                absint += chunk_abs
                hi = new_hi
                quiet = quiet + 1 if chunk_abs <= scheme.rel_tol * max(absint, 1e-300) + floor else 0
            tail_bound = chunk_abs if math.isfinite(chunk_abs) else 0.0
            tail_note = "heuristic"

    return QuadratureResult(
        value=value, abs_integral=absint, rel_change=rel_change,
        refinements=rounds, panels=panels, converged=converged,
        head_correction=head_corr, tail_bound=tail_bound, tail_note=tail_note,
        r_max_used=hi,
    )


def rough_integral(
    g: Callable[[np.ndarray], np.ndarray],
    scheme: QuadratureScheme,
    lo: float,
    hi: float,
) -> float:
    """Single-pass composite estimate (no refinement); used for noise floors."""
    if hi <= lo:
        return 0.0
    value, _ = _compose_panels(g, _clip_edges(scheme, lo, hi), scheme.nodes_per_panel)
    return value


def integrate_report(
    g: Callable[[np.ndarray], np.ndarray],
    scheme: QuadratureScheme,
    lo: float | None = None,
    hi: float | None = None,
) -> QuadratureResult:
    a = scheme.r_min if lo is None else lo
    b = scheme.r_max if hi is None else hi
    return integrate_adaptive(g, scheme, a, b)


def integrate(
    g: Callable[[np.ndarray], np.ndarray],
    scheme: QuadratureScheme,
    lo: float | None = None,
    hi: float | None = None,
) -> float:
    """Adaptive panel-wise Gauss-Legendre estimate of int_lo^hi g(r) dr."""
    return integrate_report(g, scheme, lo, hi).value


# ---------------------------------------------------------------------------
# weighted norms


def weighted_norm_report(
    u: RadialProfile,
    use_derivative: bool,
    exponent_p: float,
    weight_gamma: float,
    N: int,
    scheme: QuadratureScheme,
) -> QuadratureResult:
    """sphere_area(N) * int |f or f'|^p r^(N-1-gamma) dr over the support.

    Emits IntegrabilityWarning when the profile does not vanish near the
    origin and the local exponent there is <= -1.
    """
    if exponent_p <= 0.0:
        raise ValueError("norm exponent must be positive")
    f = u.deriv if use_derivative else u.eval
    w = N - 1.0 - weight_gamma
    origin = u.deriv_origin_power if use_derivative else u.origin_power
    env = u.deriv_envelope if use_derivative else u.envelope

    if u.reaches_origin() and origin is not None:
        nu = w + exponent_p * origin
        if nu <= -1.0:
            warnings.warn(
                f"weighted norm has origin exponent {nu:.3f} <= -1; "
                "the integral diverges at the origin",
                IntegrabilityWarning, stacklevel=2,
            )

    def g(r: np.ndarray) -> np.ndarray:
        return np.abs(f(r)) ** exponent_p * r**w

    lo = max(scheme.r_min, u.support[0])
    # a finite support is always covered in full; r_max truncates only
    # genuinely unbounded profiles (with tail accounting)
    unbounded = math.isinf(u.support[1])
    hi = scheme.r_max if unbounded else u.support[1]
    tail_fn = None
    if env is not None and unbounded:
        tail_fn = lambda R: env.bound(exponent_p, w, R)
    res = integrate_adaptive(
        g, scheme, lo, hi,
        tail_bound_fn=tail_fn,
        tail_open=unbounded,
        head=u.reaches_origin() and scheme.r_min > 0.0,
        kink_fns=(f,) if needs_kink_tracking(exponent_p) else (),
    )
    area = sphere_area(N)
    res.value *= area
    res.abs_integral *= area
    res.head_correction *= area
    res.tail_bound *= area
    return res


def weighted_norm_term(
    u: RadialProfile,
    use_derivative: bool,
    exponent_p: float,
    weight_gamma: float,
    N: int,
    scheme: QuadratureScheme,
) -> float:
    return weighted_norm_report(u, use_derivative, exponent_p, weight_gamma, N, scheme).value
