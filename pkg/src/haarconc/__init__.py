"""Concentration of Haar measure via random-walk mixing: samplers, exact
kernels, certified envelopes, bound calculators, and experiment pipelines."""

__version__ = "0.1.0"

from .bounds import (
    BoundInputs,
    BoundResult,
    NormEstimate,
    concentration_constant,
    esd_bounds,
    estimate_norms,
    tail_bound,
)
from .groups import (
    Permutation,
    ReflectionStep,
    StepDistribution,
    UnitaryMatrix,
    compose,
    invert,
    sample_haar_permutation,
    sample_haar_unitary,
    sample_reflection_step,
    sample_step,
)
from .hermitian import (
    HermitianMatrix,
    SpectralCDF,
    conjugate,
    ecdf_value,
    eigensystem,
    eigenvalues,
    rank_distance,
    sup_cdf_distance,
)
from .kernel import (
    ExactKernel,
    FiniteGroupTable,
    IdentityReport,
    apply_kernel_power,
    build_exact_kernel,
    check_identities,
    pair_function,
    pair_potential,
    solve_potential,
    step_seminorm,
)
from .mixing import (
    DecayFit,
    MixingDiagnostic,
    TVCurve,
    exact_tv_curve,
    exact_walk_law,
    fit_decay,
    reflection_walk_envelope,
    reflection_walk_tv_bound,
    unitary_mixing_diagnostic,
    write_curve_csv,
)
from .experiments import (
    ExperimentConfig,
    ExperimentReport,
    GuaranteeViolation,
    child_rng,
    resolve_spectrum,
    run_experiment,
    run_finite_group_experiment,
    run_identity_suite,
    run_matrix_experiment,
    run_reflection_step_experiment,
    run_scaling_study,
)

__all__ = [
    "BoundInputs",
    "BoundResult",
    "DecayFit",
    "ExactKernel",
    "ExperimentConfig",
    "ExperimentReport",
    "FiniteGroupTable",
    "GuaranteeViolation",
    "HermitianMatrix",
    "IdentityReport",
    "MixingDiagnostic",
    "NormEstimate",
    "Permutation",
    "ReflectionStep",
    "SpectralCDF",
    "StepDistribution",
    "TVCurve",
    "UnitaryMatrix",
    "apply_kernel_power",
    "build_exact_kernel",
    "check_identities",
    "child_rng",
    "compose",
    "concentration_constant",
    "conjugate",
    "ecdf_value",
    "eigensystem",
    "eigenvalues",
    "esd_bounds",
    "estimate_norms",
    "exact_tv_curve",
    "exact_walk_law",
    "fit_decay",
    "invert",
    "pair_function",
    "pair_potential",
    "rank_distance",
    "reflection_walk_envelope",
    "reflection_walk_tv_bound",
    "resolve_spectrum",
    "run_experiment",
    "run_finite_group_experiment",
    "run_identity_suite",
    "run_matrix_experiment",
    "run_reflection_step_experiment",
    "run_scaling_study",
    "sample_haar_permutation",
    "sample_haar_unitary",
    "sample_reflection_step",
    "sample_step",
    "solve_potential",
    "step_seminorm",
    "sup_cdf_distance",
    "tail_bound",
    "unitary_mixing_diagnostic",
    "write_curve_csv",
]
