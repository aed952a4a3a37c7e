"""Utility-maximizing entropy of densities on finite probability spaces.

The package computes ``H_u(f) = ln u^{-1}(N_u(f))`` through the multiplier
equation of the convex dual, and studies how it evolves under doubly
stochastic Markov operators and their continuous-time semigroups.
"""

from .dynamics import (
    EquivalenceReport,
    HTheoremReport,
    ProbeVerdict,
    Trajectory,
    equivalence_report,
    evolve,
    exactness_probe,
    h_theorem_check,
    semigroup_evolve,
)
from .entropy import (
    EntropyResult,
    bound_lambda,
    bound_linf,
    h_u,
    n_u,
    oracle_n_u,
    pinsker_gap,
    quantitative_bound,
    renyi_entropy,
    shannon_entropy,
    solve_lambda,
    two_point_value,
)
from .errors import NumericalError, UEntropyError, ValidationError
from .markov import (
    Semigroup,
    StochasticOperator,
    adjoint_apply,
    apply,
    compose,
    conditional_expectation,
    identity_operator,
    make_operator,
    make_semigroup,
    mixing_operator,
    permutation_operator,
    power,
    semigroup_apply,
    sinkhorn_random,
)
from .measure import (
    Density,
    MeasureSpace,
    expectation,
    l1_distance,
    l1_to_uniform,
    lp_norm,
    make_density,
    make_space,
    normalize,
    point_density,
    random_density,
    uniform_density,
    uniform_space,
)
from .utility import (
    RiskProfile,
    UtilityFunction,
    affine_utility,
    asymptotic_elasticity,
    check_admissible,
    dual_value,
    inverse_marginal,
    inverse_utility,
    isoelastic_utility,
    log_utility,
    relative_risk_aversion,
)

__version__ = "0.1.0"
