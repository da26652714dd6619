"""Parameter space of the weighted interpolation inequalities.

The inequalities studied by this package are indexed by a dimension N, an
exponent p > 1 and two weight exponents (a, b).  This module owns that
tuple: region classification of the (a, b) plane, the sharp constants for
the L^2 and L^p families, and per-theorem hypothesis checking.  Everything
here is exact arithmetic on the parameters; no quadrature is involved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

__all__ = [
    "REL_EQ_TOL",
    "CknParams",
    "Region",
    "StabilityForm",
    "classify_region",
    "also_in_q",
    "in_p_family",
    "in_q_family",
    "sharp_constant_l2",
    "sharp_constant_lp",
    "check_hypotheses",
    "hypotheses_hold",
    "PRESETS",
    "Preset",
]

# Relative tolerance for equality-type hypotheses (a = Nb/(N-p) and friends).
# Parameters are user-supplied reals; exact float equality is meaningless.
REL_EQ_TOL = 1e-12


def _releq(x: float, y: float, tol: float = REL_EQ_TOL) -> bool:
    return abs(x - y) <= tol * max(1.0, abs(x), abs(y))


@dataclass(frozen=True)
class CknParams:
    """Parameter tuple (N, p, a, b) plus the derived weight exponents.

    The three weighted norms of the inequality family use the radial weights
    |x|^{-pb} (gradient term), |x|^{-pa} (mass term) and
    |x|^{-((p-1)a+b+1)} (mixed term).  The extremal family decays like
    exp(-r^theta) with theta = b - a + 1.
    """

    N: int
    p: float
    a: float
    b: float

    def __post_init__(self) -> None:
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"dimension N must be an integer >= 1, got {self.N}")
        if not self.p > 1:
            raise ValueError(f"exponent p must satisfy p > 1, got {self.p}")

    @property
    def grad_weight(self) -> float:
        return self.p * self.b

    @property
    def mass_weight(self) -> float:
        return self.p * self.a

    @property
    def mixed_weight(self) -> float:
        return (self.p - 1.0) * self.a + self.b + 1.0

    @property
    def manifold_power(self) -> float:
        """Exponent theta = b - a + 1 of the extremal family exp(-r^theta/...)."""
        return self.b - self.a + 1.0

    def region(self) -> "Region":
        return classify_region(self.N, self.a, self.b)

    def label(self) -> str:
        return f"N={self.N},p={self.p:g},a={self.a:g},b={self.b:g}"


class Region(Enum):
    """Classification of the (a, b) plane for the L^2 sharp-constant theory.

    P1/P2 carry the plain-exponential extremal family, Q1/Q2 the
    power-times-exponential family; DIAGONAL (a = b + 1) admits no
    extremizer.  P and Q are the unions, present for query convenience;
    ``classify_region`` itself always returns one of the leaf tags.
    """

    P1 = "P1"
    P2 = "P2"
    P = "P"
    Q1 = "Q1"
    Q2 = "Q2"
    Q = "Q"
    DIAGONAL = "diagonal"
    OTHER = "other"


def classify_region(N: int, a: float, b: float) -> Region:
    """Classify (a, b) for dimension N.

    Ties: a = b + 1 exactly is DIAGONAL.  On the boundary b = (N-2)/2 both
    the P and Q membership predicates hold (they are weak inequalities);
    the P-tag is reported, matching the constant assignment of the L^2
    sharp-constant theorem, and ``also_in_q`` exposes the dual membership.
    OTHER is returned only for non-finite inputs.
    """
    if not (math.isfinite(a) and math.isfinite(b)):
        return Region.OTHER
    t = b - a + 1.0
    half = (N - 2.0) / 2.0
    if t == 0.0:
        return Region.DIAGONAL
    if t > 0.0:
        return Region.P1 if b <= half else Region.Q2
    return Region.P2 if b >= half else Region.Q1


def also_in_q(N: int, a: float, b: float) -> bool:
    """True when (a, b) additionally satisfies a Q-region membership.

    Happens exactly on the boundary b = (N-2)/2 with b - a + 1 != 0, where
    ``classify_region`` reports the P-tag.
    """
    return b == (N - 2.0) / 2.0 and b - a + 1.0 != 0.0


def in_p_family(region: Region) -> bool:
    return region in (Region.P, Region.P1, Region.P2)


def in_q_family(region: Region) -> bool:
    return region in (Region.Q, Region.Q1, Region.Q2)


def sharp_constant_l2(N: int, a: float, b: float) -> float:
    """Sharp constant of the L^2 inequality for the region of (a, b).

    |N - (a+b+1)|/2 in the P regions, |N - (3b-a+3)|/2 in the Q regions,
    |N - 2(b+1)|/2 on the diagonal a = b + 1.
    """
    region = classify_region(N, a, b)
    if region is Region.DIAGONAL:
        return abs(N - 2.0 * (b + 1.0)) / 2.0
    if in_q_family(region):
        return abs(N - (3.0 * b - a + 3.0)) / 2.0
    return abs(N - (a + b + 1.0)) / 2.0


def sharp_constant_lp(params: CknParams) -> float:
    """Sharp constant |N - (p-1)a - b - 1| / p of the L^p product inequality."""
    return abs(params.N - (params.p - 1.0) * params.a - params.b - 1.0) / params.p


class StabilityForm(Enum):
    """The stability estimates (and the scaling construction) checked here.

    Naming scheme: SI_* bounds the scale-invariant (product-form) deficit,
    NI_* the scale-non-invariant (additive) deficit; the suffix names the
    distance used on the right hand side.

    ==================  =======================================================
    SI_HALF_POWER       invariant deficit >= C * (grad/mass)^(1/p) *
                        half-power L^2 distance, free scale, 1 < p < 2
    SI_PNORM            invariant deficit >= C * (grad/mass)^(1/p) *
                        mass-weight L^p distance, free scale, p >= 2
    SI_MIXED            invariant deficit >= C * mixed-weight L^p distance,
                        free scale, p >= 2
    NI_HALF_POWER       additive deficit >= C * half-power L^2 distance,
                        pinned scale, 1 < p < 2
    NI_GRAD_MASS        additive deficit >= C * (gradient + mass) L^p
                        distance, pinned scale, p >= 2
    NI_MIXED            additive deficit >= C * mixed-weight L^p distance,
                        pinned scale, p >= 2
    SCALING             hypotheses of the exact deficit identities and of the
                        scaling counterexample construction
    ==================  =======================================================
    """

    SI_HALF_POWER = "si-half-power"
    SI_PNORM = "si-pnorm"
    SI_MIXED = "si-mixed"
    NI_HALF_POWER = "ni-half-power"
    NI_GRAD_MASS = "ni-grad-mass"
    NI_MIXED = "ni-mixed"
    SCALING = "scaling"


def _ratio_nb(params: CknParams) -> float:
    """N*b/(N-p), guarded against N == p."""
    if params.N == params.p:
        return math.inf
    return params.N * params.b / (params.N - params.p)


def check_hypotheses(form: StabilityForm, params: CknParams) -> list[tuple[str, bool]]:
    """Evaluate every hypothesis of the named estimate, one (name, bool) each.

    Equality constraints are compared with relative tolerance REL_EQ_TOL.
    """
    N, p, a, b = params.N, params.p, params.a, params.b
    nb = _ratio_nb(params)
    critical_b = (N - p) / p

    if form in (StabilityForm.SI_HALF_POWER, StabilityForm.NI_HALF_POWER):
        return [
            ("N > 2", N > 2),
            ("1 < p < 2", 1.0 < p < 2.0),
            ("0 <= b", b >= 0.0),
            ("b < (N-p)/p", b < critical_b),
            ("a = N*b/(N-p)", math.isfinite(nb) and _releq(a, nb)),
        ]
    if form in (StabilityForm.SI_PNORM, StabilityForm.NI_GRAD_MASS):
        return [
            ("N > p", N > p),
            ("p >= 2", p >= 2.0),
            ("0 <= b", b >= 0.0),
            ("b < (N-p)/p", b < critical_b),
            ("a = N*b/(N-p)", math.isfinite(nb) and _releq(a, nb)),
        ]
    if form is StabilityForm.NI_MIXED:
        return [
            ("N > p", N > p),
            ("p >= 2", p >= 2.0),
            ("0 <= b", b >= 0.0),
            ("b < (N-p)/p", b < critical_b),
            ("a < N*b/(N-p)", a < nb),
            (
                "(p-1)a+b+1 = p*b*N/(N-p)",
                math.isfinite(nb) and _releq(params.mixed_weight, p * nb),
            ),
        ]
    if form is StabilityForm.SI_MIXED:
        return [
            ("p >= 2", p >= 2.0),
            ("0 <= b", b >= 0.0),
            ("b < (N-p)/p", b < critical_b),
            ("a < N*b/(N-p)", a < nb),
            (
                "(p-1)a+b+1 = p*b*N/(N-p)",
                math.isfinite(nb) and _releq(params.mixed_weight, p * nb),
            ),
        ]
    if form is StabilityForm.SCALING:
        return [
            ("N >= 1", N >= 1),
            ("p > 1", p > 1.0),
            ("b - a + 1 > 0", params.manifold_power > 0.0),
            ("b <= (N-p)/p", b <= critical_b),
        ]
    raise ValueError(f"unknown stability form: {form!r}")


def hypotheses_hold(form: StabilityForm, params: CknParams) -> bool:
    return all(ok for _, ok in check_hypotheses(form, params))


@dataclass(frozen=True)
class Preset:
    """A named parameter set, usually satisfying one estimate's hypotheses.

    form is None for presets that exist for other campaigns (e.g. the
    Q-region attainment point, which satisfies no stability estimate's
    hypotheses).
    """

    params: CknParams
    form: StabilityForm | None
    note: str = ""


def _presets() -> dict[str, Preset]:
    # b = (N-2)/p, a = N(N-2)/(p(N-p)) realises the half-power hypotheses
    # for any N > 2, 1 < p < 2; here N = 3, p = 3/2.
    half_power = CknParams(N=3, p=1.5, a=4.0 / 3.0, b=2.0 / 3.0)
    # b = (N-p)/(p+1), a = N/(p+1) - 1/(p^2-1) realises the mixed-weight
    # hypotheses for any N > p >= 2; here N = 4, p = 2.
    mixed = CknParams(N=4, p=2.0, a=1.0, b=2.0 / 3.0)
    pnorm = CknParams(N=4, p=2.0, a=1.0, b=0.5)
    hydrogen = CknParams(N=3, p=2.0, a=0.0, b=0.0)
    # Q2-region L^2 point where N(b-a+3) = 2(3b-a+3); the power-exponential
    # family attains the Q-region constant there.
    q_region = CknParams(N=4, p=2.0, a=1.5, b=1.5)
    return {
        "si-half-power": Preset(half_power, StabilityForm.SI_HALF_POWER),
        "si-pnorm": Preset(pnorm, StabilityForm.SI_PNORM),
        "si-mixed": Preset(mixed, StabilityForm.SI_MIXED),
        "ni-half-power": Preset(half_power, StabilityForm.NI_HALF_POWER),
        "ni-grad-mass": Preset(pnorm, StabilityForm.NI_GRAD_MASS),
        "ni-mixed": Preset(mixed, StabilityForm.NI_MIXED),
        "hydrogen": Preset(hydrogen, StabilityForm.SI_PNORM,
                           note="uncertainty-principle point a = b = 0"),
        "scaling": Preset(half_power, StabilityForm.SCALING),
        "q-region-l2": Preset(q_region, None,
                              note="Q2 point for the L^2 power-exponential family"),
    }


PRESETS: dict[str, Preset] = _presets()
