"""Exponential tail bounds for normed partial sums under iterated-logarithm norming.

The library computes explicit upper bounds for Q(u) = P(sup_n ||S(n)|| /
(sqrt(n) v(n)) > u) on Lebesgue, mixed Lebesgue-Riesz, and sup-over-parameter
function spaces discretized to finite grids, plus a Monte Carlo harness that
checks the bounds against simulation at desk scale.
"""

from .constants import (
    C_ROSENTHAL,
    C_ROSENTHAL_SYMMETRIC,
    MixingProfile,
    doob_factor,
    mixingale_coefficient,
    rosenthal_upper,
)
from .envelopes import (
    MomentEnvelope,
    TailClass,
    classify_tail,
    envelope_from_field,
    envelope_from_json,
    envelope_from_moments,
    envelope_to_json,
    mixed_envelope_from_field,
    tail_argmin,
    tail_from_envelope,
)
from .entropy_ct import (
    DEFAULT_ALPHAS,
    DEFAULT_THETA_GRID,
    AnalyticCovering,
    ChainedEnvelope,
    EmpiricalCovering,
    IndexedField,
    J_functional,
    NuPDetail,
    covering_from_json,
    covering_to_json,
    distance_r,
    distance_r_matrix,
    field_W,
    holder_example_envelope,
    moment_distance_rho,
    nu_envelope,
    nu_p,
    nu_p_detail,
    sigma_bar,
    sigma_hat,
)
from .grid_spaces import (
    ExponentVector,
    GridFunction,
    GridMeasureSpace,
    flatten_product,
    grid_function_from_json,
    grid_function_to_json,
    lp_norm,
    minkowski_slack,
    mixed_norm,
    permutation_slack,
)
from .lil_bounds import (
    MAX_ADMISSIBLE_W_EPS,
    BoundEvaluation,
    OptimizedBound,
    ShapeFit,
    TailBoundCurve,
    evaluate_bound_curve,
    fit_bound_shape,
    lower_bound_Q,
    max_admissible_w,
    optimize_bound,
    upper_bound_F,
    upper_bound_G,
    upper_bound_Theta,
)
from .partitions import (
    E_E,
    NormingSequence,
    Partition,
    YVerdict,
    class_Y_check,
    explicit_partition,
    geometric_partition,
    norming_value,
)
from .simulate import (
    DominanceReport,
    EmpiricalCurve,
    FieldSpec,
    TrajectoryEnsemble,
    clopper_pearson_upper,
    dominance_report,
    empirical_Q,
    envelope_for_field_spec,
    horizon_growth,
    resolve_threads,
    simulate,
    simulate_many,
)

__version__ = "0.1.0"

__all__ = [
    "C_ROSENTHAL",
    "C_ROSENTHAL_SYMMETRIC",
    "MixingProfile",
    "doob_factor",
    "mixingale_coefficient",
    "rosenthal_upper",
    "MomentEnvelope",
    "TailClass",
    "classify_tail",
    "envelope_from_field",
    "envelope_from_json",
    "envelope_from_moments",
    "envelope_to_json",
    "mixed_envelope_from_field",
    "tail_argmin",
    "tail_from_envelope",
    "AnalyticCovering",
    "ChainedEnvelope",
    "DEFAULT_ALPHAS",
    "DEFAULT_THETA_GRID",
    "EmpiricalCovering",
    "IndexedField",
    "J_functional",
    "NuPDetail",
    "covering_from_json",
    "covering_to_json",
    "distance_r",
    "distance_r_matrix",
    "field_W",
    "holder_example_envelope",
    "moment_distance_rho",
    "nu_envelope",
    "nu_p",
    "nu_p_detail",
    "sigma_bar",
    "sigma_hat",
    "ExponentVector",
    "GridFunction",
    "GridMeasureSpace",
    "flatten_product",
    "grid_function_from_json",
    "grid_function_to_json",
    "lp_norm",
    "minkowski_slack",
    "mixed_norm",
    "permutation_slack",
    "BoundEvaluation",
    "OptimizedBound",
    "ShapeFit",
    "TailBoundCurve",
    "evaluate_bound_curve",
    "fit_bound_shape",
    "lower_bound_Q",
    "max_admissible_w",
    "MAX_ADMISSIBLE_W_EPS",
    "optimize_bound",
    "upper_bound_F",
    "upper_bound_G",
    "upper_bound_Theta",
    "E_E",
    "NormingSequence",
    "Partition",
    "YVerdict",
    "class_Y_check",
    "explicit_partition",
    "geometric_partition",
    "norming_value",
    "DominanceReport",
    "EmpiricalCurve",
    "FieldSpec",
    "TrajectoryEnsemble",
    "clopper_pearson_upper",
    "dominance_report",
    "empirical_Q",
    "envelope_for_field_spec",
    "horizon_growth",
    "resolve_threads",
    "simulate",
    "simulate_many",
    "__version__",
]
