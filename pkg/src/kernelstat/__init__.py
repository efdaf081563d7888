"""Exact Markov-kernel calculus on finite statistical experiments."""

from .algebra import (
    ProductSpace,
    compose,
    compose_with_statistic,
    dirac_kernel,
    extend_kernel,
    identity_kernel,
    image,
    left_projection,
    marginal_left,
    marginal_right,
    pair_kernel,
    product_measure,
    product_space,
    pushforward,
    right_projection,
)
from .conditioning import (
    RealFunction,
    RealKernel,
    SignedMeasure,
    classical_conditional_expectation,
    conditional_distribution,
    conditional_expectation,
    conditional_expectation_via_product,
    conditional_probability,
    constant_real_kernel,
    expectation,
    function_as_estimator,
    image_support,
    mean_function,
    real_statistic,
    weighted_measure,
)
from .estimation import (
    ConvexityWarning,
    LossFunction,
    LSCertificate,
    NotComplete,
    NotSufficient,
    NotUnbiased,
    RaoBlackwellResult,
    RiskReport,
    UMVUECertificate,
    certify_umvue,
    compare_risks,
    jensen_equality,
    ls_for_statistics,
    mean_lift_agrees,
    mse_matrix,
    rao_blackwellize,
    risk,
    risks,
)
from .experiment import (
    CompletenessReport,
    Experiment,
    NoEstimand,
    NoFactorization,
    SufficiencyReport,
    SufficiencyWitness,
    UnbiasednessReport,
    UnknownTheta,
    check_completeness,
    check_completeness_via_product,
    check_sufficiency,
    check_sufficiency_via_product,
    check_unbiased,
    factor_through,
    make_experiment,
    moment_matrix,
    product_experiment,
    statistic_is_complete,
    statistic_is_sufficient,
    sufficiency_witnesses,
)
from .linalg import RankToleranceWarning
from .montecarlo import SAMPLING_BACKEND, EmpiricalReport, SampleStream, empirical_report, sample_estimator, sample_point
from .polytope import EmptyPolytope, sample_unbiased_estimators
from .spaces import (
    EXACT,
    FLOAT,
    BackendMismatch,
    Distribution,
    FiniteSpace,
    Kernel,
    KernelStatError,
    MassNotOne,
    NegativeMass,
    RowNotStochastic,
    SpaceMismatch,
    Statistic,
    UnknownPoint,
    ValueGrid,
    constant_kernel,
    event_mass,
    make_distribution,
    make_grid,
    make_kernel,
    numeric_space,
    point_mass,
    tolerance,
    uniform,
    using_tolerance,
)

__version__ = "0.1.0"
