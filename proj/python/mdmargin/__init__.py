"""Mirror descent with homogeneous potentials for linear classification.

The heavy lifting lives in the compiled extension; this package re-exports
its surface.
"""

from ._core import (  # noqa: F401
    Dataset,
    IdentityCheck,
    IdentityReport,
    InfeasibleError,
    LossKind,
    LossSpec,
    MaxMarginResult,
    MonotonicityError,
    MonotonicityPolicy,
    NormGrowthReport,
    OptimizerRun,
    PathPoint,
    Potential,
    RateFit,
    Reduction,
    RunConfig,
    SingularOriginError,
    StepKind,
    TraceRow,
    bregman,
    bregman_gap,
    classifier_norm_table,
    data_bound_C,
    dual_norm,
    fit_convergence_rate,
    fit_norm_growth,
    gen_planar2d,
    gen_sparse_highdim,
    grad_psi,
    grid_oracle_2d,
    identity_suite,
    inv_grad_psi,
    load_dataset,
    loss_grad,
    loss_value,
    lp_norm,
    margin,
    max_margin,
    max_safe_eta,
    md_step,
    nmd_step,
    pgd_step,
    psi_norm,
    psi_value,
    regularization_path,
    rescale_to_unit_margin,
    run_trajectory,
    run_trajectory_full,
    save_dataset,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
