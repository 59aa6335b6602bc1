"""Group testing with per-item prior probabilities.

Adaptive nested test plans (maximum-entropy and source-code trees),
non-adaptive sampled and block designs with negative-test decoding,
closed-form bound calculators, brute-force oracles, and a seeded Monte Carlo
harness.
"""

from .priors import (
    PopulationVector,
    PriorVector,
    RecoveredVector,
    binary_entropy,
    entropy,
    generate_prior,
    mu,
)
from .partition import (
    Band,
    Partition,
    build_partition,
    combine_for_concentration,
    is_skewed,
    measure_factor,
)
from .adaptive import (
    AdaptiveRunResult,
    NestedPlan,
    PlanNode,
    build_plan,
    me_first_stage,
    me_split,
    run_adaptive,
    run_prepartitioned_adaptive,
    sf_build_tree,
    sf_first_stage,
)
from .nonadaptive import (
    TestMatrix,
    build_block_matrix,
    build_cca_matrix,
    decode_comp,
    num_tests_cca,
    optimal_g,
    run_nonadaptive,
    sampling_distribution,
)
from .bounds import (
    BoundReport,
    adaptive_concentration,
    adaptive_expected_upper,
    block_upper,
    cca_upper,
    lower_bound,
)
from .oracle import (
    check_lemma1,
    check_lemma2,
    exact_expected_tests,
    exact_stopping_time,
    exhaustive_decode_check,
)
from .sim import (
    Campaign,
    TrialReport,
    draw_truth,
    fit_slope,
    run_campaign,
    success_curve,
)

__version__ = "0.1.0"
