"""Projection onto the extremal family and the scaling counterexample.

The extremal family {c exp(-r^theta / (theta lam^theta)) : c real, lam > 0}
attains the sharp constant of the product-form inequality.  Every stability
estimate bounds a deficit from below by a distance from this family, so the
package needs the infimum over (c, lam).  The inner problem in c is convex
(or quadratic after the half-power substitution) and is solved in closed
form where the distance is quadratic, otherwise by bracketing plus golden
section; the outer problem in lam is not assumed unimodal and is seeded by
a global log grid before local refinement.

The scaling construction shows why no stability estimate can use a bare
gradient or mass distance: the deficit is dilation invariant while those
distances scale by powers of lam, so a suitable dilation makes the distance
side arbitrarily large relative to the deficit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

from .functionals import (
    DistanceVariant,
    ZeroProfileError,
    ckn_terms,
    difference_norm,
    invariant_deficit_report,
    pair_integral,
    stability_distance,
)
from .params import CknParams, StabilityForm, hypotheses_hold
from .radial import (
    QuadratureScheme,
    RadialProfile,
    dilate_profile,
    extremal_profile,
    half_power_transform,
)
from .scalarmin import bracket_minimum, golden_section

__all__ = [
    "OptimizerConfig",
    "ProjectionResult",
    "CounterexampleReport",
    "project",
    "scale_transform",
    "counterexample_search",
    "manifold_side_distance",
]


@dataclass(frozen=True)
class OptimizerConfig:
    """Search controls for the (c, lam) minimization.

    The lam window multiplies the natural scale (mass/grad)^(1/(p theta))
    of the profile; window-boundary hits are flagged, not fatal.
    """

    lam_window: tuple[float, float] = (1e-3, 1e3)
    lam_grid: int = 61
    tol: float = 1e-8
    c_step: float = 0.5
    force_golden: bool = False
    max_golden_iter: int = 120


@dataclass
class ProjectionResult:
    c_star: float
    lam_star: float
    distance: float
    evaluations: int
    converged: bool
    variant: str
    boundary_hit: bool = False
    notes: list[str] = field(default_factory=list)


def scale_transform(u: RadialProfile, params: CknParams, lam: float) -> RadialProfile:
    """Deficit-preserving dilation lam^((N-(p-1)a-b-1)/p) u(lam r).

    The mixed term is invariant, the gradient term scales by
    lam^((p-1)(b+1-a)) and the mass term by lam^(a-b-1).
    """
    if lam <= 0.0:
        raise ValueError(f"scale factor must be positive, got {lam}")
    s = (params.N - (params.p - 1.0) * params.a - params.b - 1.0) / params.p
    out = dilate_profile(u, lam, amplitude=lam**s)
    return out.with_label(f"scaled({u.label},lam={lam:g})")


# ---------------------------------------------------------------------------
# inner (c) solvers


def _half_power_shape(params: CknParams, lam: float) -> RadialProfile:
    """Half-power transform of the unit extremal: exp(-(p/2) r^theta/(theta lam^theta))."""
    return half_power_transform(extremal_profile(params, 1.0, lam), params.p)


class _InnerSolver:
    """Best coefficient c for a fixed scale lam, plus the distance there.

    Quadratic variants (p = 2, or any p through the half-power
    substitution) use the projection identity

        min_c ||U - c' E||^2 = ||U||^2 - <U, E>^2 / ||E||^2,

    so a scale scan costs two pairings per lam; non-quadratic variants run
    bracketing + golden section on c.  Scans may use a relaxed quadrature
    scheme; callers re-evaluate the chosen point at full precision.
    """

    def __init__(
        self,
        u: RadialProfile,
        params: CknParams,
        variant: DistanceVariant,
        scheme: QuadratureScheme,
        cfg: OptimizerConfig,
    ) -> None:
        self.u = u
        self.params = params
        self.variant = variant
        self.scheme = scheme
        self.cfg = cfg
        self.evaluations = 0
        self.last_c: float | None = None
        self.half = variant in (DistanceVariant.HALF_POWER, DistanceVariant.HALF_POWER_PINNED)
        self.hu = half_power_transform(u, params.p) if self.half else None
        self.quadratic = self.half or params.p == 2.0
        self._alpha_cache: dict[int, float] = {}

    def distance(self, c: float, lam: float, scheme: QuadratureScheme | None = None) -> float:
        self.evaluations += 1
        return stability_distance(self.u, self.params, self.variant, c, lam,
                                  scheme or self.scheme)

    def _pairings(self, lam: float, scheme: QuadratureScheme) -> tuple[float, float]:
        """(<U, E>, <E, E>) in the variant's quadratic geometry."""
        p, N = self.params.p, self.params.N
        if self.half:
            shape = _half_power_shape(self.params, lam)
            num = pair_integral(self.hu, shape, self.params.mass_weight, N, scheme,
                                kink_fns=(self.hu.eval,))
            den = pair_integral(shape, shape, self.params.mass_weight, N, scheme)
            return num, den
        e = extremal_profile(self.params, 1.0, lam)
        if self.variant is DistanceVariant.GRAD_MASS_PINNED:
            num = pair_integral(self.u, e, self.params.grad_weight, N, scheme,
                                use_derivative=True) + \
                pair_integral(self.u, e, self.params.mass_weight, N, scheme)
            den = pair_integral(e, e, self.params.grad_weight, N, scheme,
                                use_derivative=True) + \
                pair_integral(e, e, self.params.mass_weight, N, scheme)
            return num, den
        gamma = (self.params.mass_weight
                 if self.variant is DistanceVariant.PNORM
                 else self.params.mixed_weight)
        return (pair_integral(self.u, e, gamma, N, scheme),
                pair_integral(e, e, gamma, N, scheme))

    def _alpha(self, scheme: QuadratureScheme) -> float:
        """||U||^2 in the variant's quadratic geometry (lam-independent)."""
        key = id(scheme)
        if key not in self._alpha_cache:
            p, N = self.params.p, self.params.N
            if self.half:
                val = pair_integral(self.hu, self.hu, self.params.mass_weight, N, scheme)
            elif self.variant is DistanceVariant.GRAD_MASS_PINNED:
                val = pair_integral(self.u, self.u, self.params.grad_weight, N, scheme,
                                    use_derivative=True) + \
                    pair_integral(self.u, self.u, self.params.mass_weight, N, scheme)
            else:
                gamma = (self.params.mass_weight
                         if self.variant is DistanceVariant.PNORM
                         else self.params.mixed_weight)
                val = pair_integral(self.u, self.u, gamma, N, scheme)
            self._alpha_cache[key] = val
        return self._alpha_cache[key]

    def _coef_from_pairings(self, num: float, den: float) -> float:
        if den <= 0.0:
            return 0.0
        s = num / den
        if self.half:
            return math.copysign(abs(s) ** (2.0 / self.params.p), s)
        return s

    def closed_form_c(self, lam: float, scheme: QuadratureScheme | None = None) -> float | None:
        if not self.quadratic or self.cfg.force_golden:
            return None
        num, den = self._pairings(lam, scheme or self.scheme)
        return self._coef_from_pairings(num, den) if den > 0.0 else None

    def scan_value(self, lam: float, scheme: QuadratureScheme) -> tuple[float, float]:
        """(c, approximate distance) at this scale, cheap enough to scan."""
        if self.quadratic and not self.cfg.force_golden:
            num, den = self._pairings(lam, scheme)
            self.evaluations += 1
            if den > 0.0:
                val = max(self._alpha(scheme) - num * num / den, 0.0)
                return self._coef_from_pairings(num, den), val
        return self._golden_c(lam, scheme)

    def _golden_c(self, lam: float, scheme: QuadratureScheme) -> tuple[float, float]:
        if self.last_c is not None:
            c0 = self.last_c
        else:
            num, den = self._pairings(lam, scheme)
            c0 = self._coef_from_pairings(num, den)
        step = self.cfg.c_step * max(1.0, abs(c0))
        lo, _, hi, _ = bracket_minimum(lambda c: self.distance(c, lam, scheme), c0, step=step)
        res = golden_section(lambda c: self.distance(c, lam, scheme), lo, hi,
                             tol=self.cfg.tol, max_iter=self.cfg.max_golden_iter)
        self.last_c = res.x
        return res.x, res.fx

    def best_c(self, lam: float) -> tuple[float, float]:
        """Full-precision inner solution at this scale."""
        c = self.closed_form_c(lam)
        if c is not None:
            return c, self.distance(c, lam)
        return self._golden_c(lam, self.scheme)


def _natural_scale(u: RadialProfile, params: CknParams, scheme: QuadratureScheme) -> float:
    t = ckn_terms(u, params, scheme)
    if t.grad_term <= 0.0 or t.mass_term <= 0.0:
        return 1.0
    return (t.mass_term / t.grad_term) ** (1.0 / (params.p * params.manifold_power))


def _minimize_scale(
    best_c: Callable[[float], tuple[float, float]],
    lam_center: float,
    cfg: OptimizerConfig,
) -> tuple[float, float, float, bool, bool]:
    """Log-grid scan plus golden refinement of lam; returns
    (c, lam, value, boundary_hit, converged)."""
    lo = lam_center * cfg.lam_window[0]
    hi = lam_center * cfg.lam_window[1]
    n = cfg.lam_grid
    grid = [lo * (hi / lo) ** (i / (n - 1)) for i in range(n)]
    values: list[float] = []
    cs: list[float] = []
    for lam in grid:
        c, val = best_c(lam)
        cs.append(c)
        values.append(val)
    i = min(range(n), key=values.__getitem__)
    boundary = i in (0, n - 1)
    bracket_lo = math.log(grid[max(0, i - 1)])
    bracket_hi = math.log(grid[min(n - 1, i + 1)])

    cache: dict[float, tuple[float, float]] = {}

    def on_log(t: float) -> float:
        lam = math.exp(t)
        c, val = best_c(lam)
        cache[t] = (c, val)
        return val

    res = golden_section(on_log, bracket_lo, bracket_hi, tol=cfg.tol,
                         max_iter=cfg.max_golden_iter)
    if res.fx <= values[i]:
        c_star, lam_star, val_star = cache[res.x][0], math.exp(res.x), res.fx
    else:
        c_star, lam_star, val_star = cs[i], grid[i], values[i]
    return c_star, lam_star, val_star, boundary, res.converged


def project(
    u: RadialProfile,
    params: CknParams,
    variant: DistanceVariant,
    scheme: QuadratureScheme,
    opt_cfg: OptimizerConfig | None = None,
) -> ProjectionResult:
    """Approximate minimizer of the variant distance over the extremal family.

    Pinned variants solve the 1-D problem in c at lam = 1; free variants
    scan a log grid of scales around the natural scale before refining.
    """
    if u.identically_zero:
        raise ZeroProfileError("cannot project the zero profile")
    cfg = opt_cfg or OptimizerConfig()
    variant.check_exponent(params.p)
    solver = _InnerSolver(u, params, variant, scheme, cfg)
    notes: list[str] = []
    if variant.pinned:
        c, val = solver.best_c(1.0)
        return ProjectionResult(
            c_star=c, lam_star=1.0, distance=val,
            evaluations=solver.evaluations, converged=True,
            variant=variant.value, notes=notes,
        )
    scan = _relaxed(scheme)
    lam_center = _natural_scale(u, params, scan)
    c, lam, _, boundary, conv = _minimize_scale(
        lambda lam_: solver.scan_value(lam_, scan), lam_center, cfg
    )
    # the scan located the minimizer; report a full-precision value there
    c_fine = solver.closed_form_c(lam)
    if c_fine is not None:
        c = c_fine
    val = solver.distance(c, lam)
    if boundary:
        notes.append("scale-window boundary hit; the reported infimum may be a window artifact")
    return ProjectionResult(
        c_star=c, lam_star=lam, distance=val,
        evaluations=solver.evaluations, converged=conv,
        variant=variant.value, boundary_hit=boundary, notes=notes,
    )


# ---------------------------------------------------------------------------
# side distances and the scaling counterexample


def _relaxed(scheme: QuadratureScheme) -> QuadratureScheme:
    """Cheaper clone for optimizer scans; the chosen point is re-evaluated
    with the caller's scheme afterwards."""
    from dataclasses import replace

    return replace(scheme, rel_tol=max(scheme.rel_tol, 1e-7), max_refinements=4,
                   track_kinks=False, strict=False)


def manifold_side_distance(
    u: RadialProfile,
    params: CknParams,
    side: str,
    scheme: QuadratureScheme,
    opt_cfg: OptimizerConfig | None = None,
) -> ProjectionResult:
    """Infimum over the extremal family of the gradient-only or mass-only
    weighted distance (side = 'gradient' | 'mass'); free (c, lam).

    The (c, lam) scan runs on a relaxed quadrature scheme; the reported
    distance is re-evaluated at the minimizer with the full scheme.
    """
    if side not in ("gradient", "mass"):
        raise ValueError("side must be 'gradient' or 'mass'")
    from dataclasses import replace as _dc_replace

    cfg = opt_cfg or OptimizerConfig()
    # the certificate only needs the infimum to a few digits; scan coarsely
    cfg = _dc_replace(cfg, tol=max(cfg.tol, 1e-6))
    use_deriv = side == "gradient"
    gamma = params.grad_weight if use_deriv else params.mass_weight
    p, N = params.p, params.N
    scan = _relaxed(scheme)
    evaluations = 0

    def dist(c: float, lam: float, quad: QuadratureScheme) -> float:
        nonlocal evaluations
        evaluations += 1
        v = extremal_profile(params, c, lam)
        return difference_norm(u, v, p, gamma, N, quad, use_derivative=use_deriv)

    last_c: list[float | None] = [None]

    def best_c(lam: float) -> tuple[float, float]:
        e = extremal_profile(params, 1.0, lam)
        num = pair_integral(u, e, gamma, N, scan, use_derivative=use_deriv)
        den = pair_integral(e, e, gamma, N, scan, use_derivative=use_deriv)
        c0 = num / den if den > 0.0 else 0.0
        if p == 2.0 and not cfg.force_golden:
            last_c[0] = c0
            return c0, dist(c0, lam, scan)
        seed = last_c[0] if last_c[0] is not None else c0
        lo, _, hi, _ = bracket_minimum(lambda c: dist(c, lam, scan), seed,
                                       step=cfg.c_step * max(1.0, abs(seed)))
        res = golden_section(lambda c: dist(c, lam, scan), lo, hi, tol=cfg.tol,
                             max_iter=cfg.max_golden_iter)
        last_c[0] = res.x
        return res.x, res.fx

    lam_center = _natural_scale(u, params, scan)
    c, lam, _, boundary, conv = _minimize_scale(best_c, lam_center, cfg)
    val = dist(c, lam, scheme)
    return ProjectionResult(
        c_star=c, lam_star=lam, distance=val, evaluations=evaluations,
        converged=conv, variant=f"{side}-side", boundary_hit=boundary,
    )


@dataclass
class CounterexampleReport:
    """Certificate that a dilation defeats a gradient/mass-distance estimate.

    The verified chain is
        deficit(u_lam) <= (C/2) side_term(u_lam) <= C * side_distance(u_lam),
    with both slacks reported; ``certified`` means both are >= 0 up to
    rounding, so deficit(u) = deficit(u_lam) is bounded by the full
    right-hand side C1 * grad-distance + C2 * mass-distance at u_lam.
    """

    route: str
    c1: float
    c2: float
    lam: float
    deficit_u: float
    deficit_scaled: float
    side_term_scaled: float
    side_distance_scaled: float
    slack_deficit: float
    slack_factor2: float
    certified: bool
    scale_invariance_error: float
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "route": self.route, "C1": self.c1, "C2": self.c2, "lam": self.lam,
            "deficit_u": self.deficit_u, "deficit_scaled": self.deficit_scaled,
            "side_term_scaled": self.side_term_scaled,
            "side_distance_scaled": self.side_distance_scaled,
            "slack_deficit": self.slack_deficit, "slack_factor2": self.slack_factor2,
            "certified": self.certified,
            "scale_invariance_error": self.scale_invariance_error,
            "notes": list(self.notes),
        }


def counterexample_search(
    u: RadialProfile,
    params: CknParams,
    C1: float,
    C2: float,
    scheme: QuadratureScheme,
    opt_cfg: OptimizerConfig | None = None,
) -> CounterexampleReport:
    """Build the dilation that defeats a C1/C2 gradient/mass stability bound.

    Given a profile off the extremal family satisfying the factor-2 norm
    comparison side_term(u) <= 2 inf side_distance(u), the dilation factor
    is chosen from the exact scaling laws so that

        (C/2) * side_term(u_lam) = 2 * deficit(u)

    (the extra factor 2 buys certification slack), and the whole chain is
    then re-verified numerically on u_lam.
    """
    if C1 < 0.0 or C2 < 0.0 or C1 + C2 <= 0.0:
        raise ValueError("need C1, C2 >= 0 with C1 + C2 > 0")
    if not hypotheses_hold(StabilityForm.SCALING, params):
        raise ValueError("parameters violate the scaling-construction hypotheses")
    if u.identically_zero:
        raise ZeroProfileError("counterexample needs a nonzero profile")
    cfg = opt_cfg or OptimizerConfig()
    notes: list[str] = []

    rep = invariant_deficit_report(u, params, scheme)
    delta = rep.value
    if rep.below_resolution:
        raise ValueError(
            "profile has zero deficit at numerical resolution: it lies on the "
            "extremal family, which the construction excludes"
        )

    route = "gradient" if C1 > 0.0 else "mass"
    C = C1 if route == "gradient" else C2
    side_term_u = rep.terms.grad_term if route == "gradient" else rep.terms.mass_term
    theta = params.manifold_power
    exponent = (params.p - 1.0) * theta if route == "gradient" else -theta

    proj_u = manifold_side_distance(u, params, route, scheme, cfg)
    if side_term_u > 2.0 * proj_u.distance:
        notes.append(
            "seed profile fails the factor-2 comparison "
            f"({side_term_u:.6g} > 2 * {proj_u.distance:.6g}); certificate will fail"
        )

    lam = (4.0 * delta / (C * side_term_u)) ** (1.0 / exponent)
    u_lam = scale_transform(u, params, lam)

    rep_scaled = invariant_deficit_report(u_lam, params, scheme)
    side_scaled = rep_scaled.terms.grad_term if route == "gradient" else rep_scaled.terms.mass_term
    proj_scaled = manifold_side_distance(u_lam, params, route, scheme, cfg)

    slack_deficit = 0.5 * C * side_scaled - rep_scaled.value
    slack_factor2 = C * proj_scaled.distance - 0.5 * C * side_scaled
    tol_def = max(rep_scaled.condition, 1e-12 * abs(side_scaled) * C)
    tol_f2 = 1e-9 * C * max(side_scaled, proj_scaled.distance)
    certified = slack_deficit >= -tol_def and slack_factor2 >= -tol_f2
    if proj_scaled.boundary_hit:
        notes.append("side-distance search hit its scale window boundary")

    return CounterexampleReport(
        route=route, c1=C1, c2=C2, lam=lam,
        deficit_u=delta, deficit_scaled=rep_scaled.value,
        side_term_scaled=side_scaled,
        side_distance_scaled=proj_scaled.distance,
        slack_deficit=slack_deficit, slack_factor2=slack_factor2,
        certified=certified,
        scale_invariance_error=abs(rep_scaled.value - delta) / max(abs(delta), 1e-300),
        notes=notes,
    )
