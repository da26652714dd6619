"""cknstab: numerical verification of weighted interpolation inequalities.

The package evaluates the three weighted norms of the CKN-type product and
additive inequalities by radial quadrature, checks their exact Bregman-gap
identities and the pointwise vector inequalities behind them, projects
profiles onto the extremal family, estimates stability constants
empirically, and reproduces the dilation construction showing that bare
gradient/mass distances admit no stability estimate.
"""

from .params import (
    CknParams,
    PRESETS,
    Preset,
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
from .radial import (
    AccuracyError,
    IntegrabilityWarning,
    NonFiniteIntegrandError,
    QuadratureResult,
    QuadratureScheme,
    RadialProfile,
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
    weighted_norm_term,
    zero_profile,
)
from .vectorineq import (
    EmpiricalConstant,
    InequalityReport,
    VecPair,
    anchor_vector,
    bregman_gap,
    bregman_gap_signed,
    estimate_gap_constant,
    gap_kernel,
    gap_lower_bound,
    half_power_difference_check,
    power_sum_check,
)
from .functionals import (
    CknTerms,
    DeficitReport,
    DistanceVariant,
    ZeroProfileError,
    ckn_terms,
    difference_norm,
    invariant_deficit,
    invariant_deficit_report,
    invariant_gap_integral,
    noninvariant_deficit,
    noninvariant_deficit_report,
    noninvariant_gap_integral,
    pair_integral,
    stability_distance,
)
from .manifold import (
    CounterexampleReport,
    OptimizerConfig,
    ProjectionResult,
    counterexample_search,
    manifold_side_distance,
    project,
    scale_transform,
)
from .experiments import (
    AllExcludedError,
    Corpus,
    CorpusEntry,
    IdentityCampaignReport,
    PoincareConfig,
    PoincareReport,
    StabilityConstantReport,
    build_default_corpus,
    change_of_variables_check,
    estimate_stability_constant,
    passes_integrability,
    poincare_check,
    poincare_scaling_consistency,
    verify_identities,
)

__version__ = "0.1.0"
