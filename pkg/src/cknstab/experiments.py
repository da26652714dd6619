"""Verification campaigns: identity checks, stability constants, Poincare.

A campaign runs over a corpus of (parameter set, profile) pairs and reduces
to a machine-readable report.  Everything is deterministic given the corpus
seed, the quadrature scheme and the worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .functionals import (
    DistanceVariant,
    ckn_terms,
    invariant_deficit_report,
    noninvariant_deficit_report,
    invariant_gap_integral,
    noninvariant_gap_integral,
)
from .manifold import OptimizerConfig, project
from .params import CknParams, Region, StabilityForm, check_hypotheses, in_q_family
from .radial import (
    QuadratureScheme,
    RadialProfile,
    dilate_profile,
    extremal_profile,
    extremal_profile_q,
    integrate_adaptive,
    needs_kink_tracking,
    perturb_profile,
    sphere_area,
    unit_bump,
)
from .scalarmin import golden_section

__all__ = [
    "IDENTITY_TOL",
    "AllExcludedError",
    "Corpus",
    "CorpusEntry",
    "IdentityRow",
    "IdentityCampaignReport",
    "StabilityConstantReport",
    "PoincareConfig",
    "PoincareReport",
    "build_default_corpus",
    "passes_integrability",
    "verify_identities",
    "estimate_stability_constant",
    "poincare_check",
    "poincare_scaling_consistency",
    "change_of_variables_check",
    "form_distance_variant",
]

# Relative tolerance for the exact-identity residuals (pure quadrature error).
IDENTITY_TOL = 1e-6


class AllExcludedError(RuntimeError):
    """Every corpus member sat below numerical resolution."""


# ---------------------------------------------------------------------------
# corpus


@dataclass
class CorpusEntry:
    params: CknParams
    profiles: list[RadialProfile]


@dataclass
class Corpus:
    """Profiles grouped by the parameter set they were built for.

    Grouping (rather than a flat cross product) keeps the integrability
    invariant local: every profile is checked against its own parameters
    at build time.
    """

    entries: list[CorpusEntry]
    seed: int

    def pairs(self):
        for entry in self.entries:
            for profile in entry.profiles:
                yield entry.params, profile

    def size(self) -> int:
        return sum(len(e.profiles) for e in self.entries)


def _origin_ok(power: float | None, weight: float, p: float, N: int) -> bool:
    if power is None:
        return True  # vanishes identically near the origin
    return N - 1.0 - weight + p * power > -1.0


def passes_integrability(profile: RadialProfile, params: CknParams) -> bool:
    """All three weighted norms converge at the origin for this pair."""
    if not profile.reaches_origin():
        return True
    N, p = params.N, params.p
    return (
        _origin_ok(profile.origin_power, params.mass_weight, p, N)
        and _origin_ok(profile.deriv_origin_power, params.grad_weight, p, N)
        and _origin_ok(profile.origin_power, params.mixed_weight, p, N)
    )


def build_default_corpus(params_sets: list[CknParams], seed: int = 0) -> Corpus:
    """Per parameter set: 5 bumps, 3 extremals (scale 0.5/1/2), 6 perturbed
    extremals (3 amplitudes x 2 bump placements), plus one power-exponential
    profile when p = 2 and the region is a Q region."""
    if not params_sets:
        raise ValueError("need at least one parameter set")
    rng = np.random.default_rng(seed)
    entries = []
    for params in params_sets:
        profiles: list[RadialProfile] = []
        for i in range(5):
            r0 = float(10.0 ** rng.uniform(-1.0, 0.45))
            r1 = min(10.0, r0 * float(10.0 ** rng.uniform(0.2, 0.8)))
            profiles.append(unit_bump(r0, r1).with_label(f"bump{i}[{r0:.3g},{r1:.3g}]"))
        for lam in (0.5, 1.0, 2.0):
            profiles.append(extremal_profile(params, 1.0, lam))
        base = extremal_profile(params, 1.0, 1.0)
        for eps in (0.01, 0.1, 0.5):
            for j, (b0, b1) in enumerate(((0.4, 1.2), (1.5, 4.0))):
                pert = perturb_profile(base, eps, unit_bump(b0, b1))
                profiles.append(pert.with_label(f"perturbed(eps={eps:g},site{j})"))
        region = params.region()
        if params.p == 2.0 and in_q_family(region):
            beta = 1.0 if region is Region.Q1 else -1.0
            profiles.append(extremal_profile_q(params.N, params.a, params.b, 1.0, beta))
        for prof in profiles:
            if not passes_integrability(prof, params):
                raise ValueError(
                    f"profile {prof.label!r} fails integrability for {params.label()}"
                )
        entries.append(CorpusEntry(params=params, profiles=profiles))
    return Corpus(entries=entries, seed=seed)


# ---------------------------------------------------------------------------
# identity campaign


@dataclass
class IdentityRow:
    profile: str
    params: str
    deficit_ni: float
    gap_ni: float
    resid_ni: float
    deficit_si: float
    gap_si: float
    resid_si: float
    skipped: bool = False
    note: str = ""

    def passed(self, tol: float = IDENTITY_TOL) -> bool:
        return self.skipped or (self.resid_ni <= tol and self.resid_si <= tol)


@dataclass
class IdentityCampaignReport:
    rows: list[IdentityRow]
    tol: float = IDENTITY_TOL

    @property
    def passed(self) -> bool:
        return all(r.passed(self.tol) for r in self.rows)

    @property
    def max_residual(self) -> float:
        vals = [max(r.resid_ni, r.resid_si) for r in self.rows if not r.skipped]
        return max(vals, default=0.0)

    def summary(self) -> dict:
        return {
            "pass_count": sum(r.passed(self.tol) and not r.skipped for r in self.rows),
            "fail_count": sum(not r.passed(self.tol) for r in self.rows),
            "skipped_count": sum(r.skipped for r in self.rows),
            "max_residual": self.max_residual,
            "tol": self.tol,
        }


def _identity_row(params: CknParams, profile: RadialProfile, scheme: QuadratureScheme) -> IdentityRow:
    if profile.identically_zero:
        return IdentityRow(profile.label, params.label(), 0, 0, 0, 0, 0, 0,
                           skipped=True, note="zero profile")
    terms = ckn_terms(profile, params, scheme)
    d_ni = noninvariant_deficit_report(profile, params, scheme, terms=terms).value
    g_ni = noninvariant_gap_integral(profile, params, scheme)
    d_si = invariant_deficit_report(profile, params, scheme, terms=terms).value
    g_si = invariant_gap_integral(profile, params, scheme, terms=terms)
    return IdentityRow(
        profile=profile.label, params=params.label(),
        deficit_ni=d_ni, gap_ni=g_ni,
        resid_ni=abs(d_ni - g_ni) / (1.0 + abs(d_ni)),
        deficit_si=d_si, gap_si=g_si,
        resid_si=abs(d_si - g_si) / (1.0 + abs(d_si)),
    )


def verify_identities(
    corpus: Corpus, scheme: QuadratureScheme, jobs: int = 1
) -> IdentityCampaignReport:
    """Check the two exact gap-integral representations on every pair.

    Hypotheses of the identities (b - a + 1 > 0, b <= (N-p)/p) must hold for
    each parameter set; the residuals are then pure quadrature error.
    """
    for entry in corpus.entries:
        bad = [n for n, ok in check_hypotheses(StabilityForm.SCALING, entry.params) if not ok]
        if bad:
            raise ValueError(
                f"identities do not hold for {entry.params.label()}: {bad}"
            )
    pairs = list(corpus.pairs())
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(lambda pq: _identity_row(pq[0], pq[1], scheme), pairs))
    else:
        rows = [_identity_row(p, q, scheme) for p, q in pairs]
    return IdentityCampaignReport(rows=rows)


# ---------------------------------------------------------------------------
# stability-constant campaign


_FORM_TO_VARIANT = {
    StabilityForm.SI_HALF_POWER: DistanceVariant.HALF_POWER,
    StabilityForm.SI_PNORM: DistanceVariant.PNORM,
    StabilityForm.SI_MIXED: DistanceVariant.MIXED_FREE,
    StabilityForm.NI_HALF_POWER: DistanceVariant.HALF_POWER_PINNED,
    StabilityForm.NI_GRAD_MASS: DistanceVariant.GRAD_MASS_PINNED,
    StabilityForm.NI_MIXED: DistanceVariant.MIXED_PINNED,
}

# forms whose estimate bounds the scale-invariant (product-form) deficit;
# the SI_* prefix is definitional, including the mixed-weight estimate
_INVARIANT_DEFICIT_FORMS = {
    StabilityForm.SI_HALF_POWER,
    StabilityForm.SI_PNORM,
    StabilityForm.SI_MIXED,
}

# forms whose statements carry the (grad/mass)^(1/p) prefactor
_PREFACTOR_FORMS = {StabilityForm.SI_HALF_POWER, StabilityForm.SI_PNORM}


def form_distance_variant(form: StabilityForm) -> DistanceVariant:
    if form not in _FORM_TO_VARIANT:
        raise ValueError(f"{form} has no associated distance variant")
    return _FORM_TO_VARIANT[form]


@dataclass
class ConstantRow:
    profile: str
    deficit: float
    prefactor: float
    distance: float
    ratio: float
    excluded: bool
    note: str = ""


@dataclass
class StabilityConstantReport:
    """Empirical lower estimate of a stability constant over a corpus.

    ``value`` is the minimum of deficit / (prefactor * projected distance)
    over included members; members whose projected distance sits below
    1e3 x the deficit's numerical resolution are excluded (0/0 ratios are
    meaningless) and counted.
    """

    value: float
    sample_count: int
    worst_witness: str
    scan_description: str
    form: StabilityForm
    params: CknParams
    excluded_count: int
    rows: list[ConstantRow] = field(default_factory=list)


def estimate_stability_constant(
    corpus: Corpus,
    params: CknParams,
    form: StabilityForm,
    scheme: QuadratureScheme,
    opt_cfg: OptimizerConfig | None = None,
) -> StabilityConstantReport:
    failed = [name for name, ok in check_hypotheses(form, params) if not ok]
    if failed:
        raise ValueError(f"{form.value} hypotheses fail for {params.label()}: {failed}")
    variant = form_distance_variant(form)
    entry = next((e for e in corpus.entries if e.params == params), None)
    if entry is None or not entry.profiles:
        raise ValueError("corpus has no profiles for the given parameters")
    rows: list[ConstantRow] = []
    for profile in entry.profiles:
        if profile.identically_zero:
            continue
        terms = ckn_terms(profile, params, scheme)
        if form in _INVARIANT_DEFICIT_FORMS:
            rep = invariant_deficit_report(profile, params, scheme, terms=terms)
        else:
            rep = noninvariant_deficit_report(profile, params, scheme, terms=terms)
        prefactor = 1.0
        if form in _PREFACTOR_FORMS:
            prefactor = (terms.grad_term / terms.mass_term) ** (1.0 / params.p)
        proj = project(profile, params, variant, scheme, opt_cfg)
        excluded = proj.distance < 1e3 * rep.condition
        ratio = math.inf if excluded else rep.value / (prefactor * proj.distance)
        rows.append(ConstantRow(
            profile=profile.label, deficit=rep.value, prefactor=prefactor,
            distance=proj.distance, ratio=ratio, excluded=excluded,
            note="below numerical resolution" if excluded else "",
        ))
    included = [r for r in rows if not r.excluded]
    if not included:
        raise AllExcludedError(
            "every corpus member projects onto the extremal family at numerical "
            "resolution; no ratio is meaningful"
        )
    worst = min(included, key=lambda r: r.ratio)
    return StabilityConstantReport(
        value=worst.ratio,
        sample_count=len(included),
        worst_witness=worst.profile,
        scan_description=f"corpus seed {corpus.seed}, {len(rows)} profiles",
        form=form,
        params=params,
        excluded_count=len(rows) - len(included),
        rows=rows,
    )


# ---------------------------------------------------------------------------
# weighted Poincare checks


@dataclass(frozen=True)
class PoincareConfig:
    """One weighted Poincare inequality instance.

    The inequality compared is

        lam^(p(N-p-rho)/(N-p)) * int_D |f'|^p r^(N-1-rho) W dr
            >= C * inf_c int_D |f - c|^p r^(N-1-N rho/(N-p)) W dr,

    with W(r) = exp(-sigma r^theta / lam^theta) and D an annulus union (or
    the whole half-line).
    """

    p: float
    rho: float
    sigma: float
    theta: float
    lam: float = 1.0
    domain: tuple[tuple[float, float], ...] | str = "all"

    def admissibility(self, N: int) -> list[tuple[str, bool]]:
        return [
            ("sigma > 0", self.sigma > 0.0),
            ("0 <= rho", self.rho >= 0.0),
            ("rho < N - p", self.rho < N - self.p),
            ("theta >= (N-p-rho)/(N-p)",
             N > self.p and self.theta >= (N - self.p - self.rho) / (N - self.p)),
            ("lam > 0", self.lam > 0.0),
        ]

    def admissible(self, N: int) -> bool:
        return all(ok for _, ok in self.admissibility(N))

    def intervals(self) -> tuple[tuple[float, float], ...]:
        if self.domain == "all":
            return ((0.0, math.inf),)
        ivs = tuple(self.domain)
        for (a, b), (c, _) in zip(ivs, ivs[1:]):
            if not a < b <= c:
                raise ValueError("annuli must be disjoint and sorted")
        if any(a < 0.0 for a, _ in ivs):
            raise ValueError("annuli must lie in (0, inf)")
        return ivs


@dataclass
class PoincareReport:
    lhs: float
    rhs_core: float
    c_star: float
    ratio: float
    degenerate: bool
    passed: bool
    config: PoincareConfig
    note: str = ""


def _poincare_integral(
    g, scheme: QuadratureScheme, interval: tuple[float, float], kink_fns=()
) -> float:
    lo, hi = interval
    lo = max(lo, scheme.r_min)
    unbounded = math.isinf(hi)
    top = scheme.r_max if unbounded else hi
    if top <= lo:
        return 0.0
    res = integrate_adaptive(g, scheme, lo, top, tail_open=unbounded,
                             head=False, kink_fns=kink_fns)
    return res.value


def poincare_check(
    f: RadialProfile,
    cfg: PoincareConfig,
    N: int,
    scheme: QuadratureScheme,
) -> PoincareReport:
    """Evaluate both sides of the weighted Poincare inequality on a domain.

    The infimum over c is the weighted mean for p = 2 and a golden-section
    minimum over the range of f otherwise (the minimizer of a weighted L^p
    distance to constants lies within the function's range).
    """
    if not cfg.admissible(N):
        bad = [name for name, ok in cfg.admissibility(N) if not ok]
        raise ValueError(f"inadmissible Poincare configuration: {bad}")
    p = cfg.p
    area = sphere_area(N)
    ivs = cfg.intervals()
    if not ivs:
        raise ValueError("empty domain")

    def weight(r: np.ndarray) -> np.ndarray:
        return np.exp(-cfg.sigma * r**cfg.theta / cfg.lam**cfg.theta)

    w_lhs = N - 1.0 - cfg.rho
    w_rhs = N - 1.0 - N * cfg.rho / (N - p)
    lhs_scale = cfg.lam ** (p * (N - p - cfg.rho) / (N - p))

    def glhs(r: np.ndarray) -> np.ndarray:
        return np.abs(f.deriv(r)) ** p * r**w_lhs * weight(r)

    lhs = lhs_scale * area * sum(
        _poincare_integral(glhs, scheme, iv,
                           kink_fns=(f.deriv,) if needs_kink_tracking(p) else ())
        for iv in ivs
    )

    def rhs_at(c: float) -> float:
        def g(r: np.ndarray) -> np.ndarray:
            return np.abs(f.eval(r) - c) ** p * r**w_rhs * weight(r)

        kf = ((lambda r: f.eval(r) - c),) if needs_kink_tracking(p) else ()
        return area * sum(_poincare_integral(g, scheme, iv, kink_fns=kf) for iv in ivs)

    # range of f over the domain brackets the optimal constant
    samples = np.concatenate([
        f.eval(np.geomspace(max(a, scheme.r_min), min(b, scheme.r_max * 4), 257))
        for a, b in ivs
    ])
    f_lo, f_hi = float(np.min(samples)), float(np.max(samples))

    if p == 2.0:
        def gnum(r: np.ndarray) -> np.ndarray:
            return f.eval(r) * r**w_rhs * weight(r)

        def gden(r: np.ndarray) -> np.ndarray:
            return r**w_rhs * weight(r)

        num = sum(_poincare_integral(gnum, scheme, iv) for iv in ivs)
        den = sum(_poincare_integral(gden, scheme, iv) for iv in ivs)
        c_star = num / den if den > 0.0 else 0.0
        rhs_core = rhs_at(c_star)
    elif f_hi - f_lo <= 1e-14 * max(1.0, abs(f_hi)):
        c_star = 0.5 * (f_lo + f_hi)
        rhs_core = rhs_at(c_star)
    else:
        res = golden_section(rhs_at, f_lo, f_hi, tol=1e-10)
        c_star, rhs_core = res.x, res.fx

    # degenerate means f is constant on the domain: both sides vanish
    mass_scale = rhs_at(c_star + max(1.0, abs(c_star)))
    degenerate = rhs_core <= 1e-13 * max(mass_scale, 1e-300)
    ratio = math.inf if degenerate else lhs / rhs_core
    passed = degenerate or (math.isfinite(ratio) and ratio > 0.0)
    return PoincareReport(
        lhs=lhs, rhs_core=rhs_core, c_star=c_star, ratio=ratio,
        degenerate=degenerate, passed=passed, config=cfg,
        note="both sides vanish (constant profile)" if degenerate else "",
    )


def poincare_scaling_consistency(
    f: RadialProfile,
    cfg: PoincareConfig,
    N: int,
    scheme: QuadratureScheme,
) -> tuple[PoincareReport, PoincareReport, float]:
    """Compare the report for (f, lam) with the dilated report (f(lam .), 1).

    The substitution r -> r/lam maps one configuration onto the other with
    the domain scaled accordingly, so the two ratios must agree.
    """
    base = poincare_check(f, cfg, N, scheme)
    if cfg.domain == "all":
        dom = "all"
    else:
        dom = tuple((a / cfg.lam, b / cfg.lam) for a, b in cfg.intervals())
    cfg1 = PoincareConfig(p=cfg.p, rho=cfg.rho, sigma=cfg.sigma, theta=cfg.theta,
                          lam=1.0, domain=dom)
    dilated = poincare_check(dilate_profile(f, cfg.lam), cfg1, N, scheme)
    if base.degenerate or dilated.degenerate:
        rel = 0.0 if base.degenerate == dilated.degenerate else math.inf
    else:
        rel = abs(base.ratio - dilated.ratio) / abs(base.ratio)
    return base, dilated, rel


@dataclass
class ChangeOfVariablesReport:
    lhs: float
    rhs: float
    rel_diff: float
    passed: bool


def change_of_variables_check(
    f: RadialProfile,
    lam_exp: float,
    N: int,
    scheme: QuadratureScheme,
    tol: float = 1e-8,
) -> ChangeOfVariablesReport:
    """Verify the radial substitution s = r^lam_exp:

        int g(s) s^(N-1) ds  =  lam_exp * int g(r^lam_exp) r^(lam_exp*N - 1) dr

    with g = f and matched truncation of both sides (the identity is exact
    for matched domains, so the difference is pure quadrature error).
    """
    if lam_exp < 1.0:
        raise ValueError("the substitution exponent must be >= 1")
    lo = max(scheme.r_min, f.support[0])
    hi = f.support[1]
    if math.isinf(hi):
        hi = scheme.r_max
        if f.envelope is not None:
            while f.envelope.bound(1.0, N - 1.0, hi) > 1e-14 and hi < scheme.max_r_max:
                hi *= 2.0
    lhs = integrate_adaptive(lambda s: f.eval(s) * s ** (N - 1.0), scheme, lo, hi).value

    lo_r, hi_r = lo ** (1.0 / lam_exp), hi ** (1.0 / lam_exp)
    rhs = lam_exp * integrate_adaptive(
        lambda r: f.eval(r**lam_exp) * r ** (lam_exp * N - 1.0), scheme, lo_r, hi_r
    ).value
    scale = max(abs(lhs), abs(rhs), 1e-300)
    rel = abs(lhs - rhs) / scale
    return ChangeOfVariablesReport(lhs=lhs, rhs=rhs, rel_diff=rel, passed=rel <= tol)
