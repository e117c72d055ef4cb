# Optimizers Package
# Relaxed objectives, gsADMM / gsAM epochs and backpropagation baselines

from .schemas import (
    InnerOptimizer,
    Sampling,
    AuxMode,
    Hyperparams,
    AdamMoments,
    AuxState,
    TrainState,
    HiddenRole,
    LastRole,
)

from .objectives import penalty_omega, augmented_lagrangian, objective_F

from .services import (
    sample_batch,
    epoch_batches,
    update_weights,
    update_p_gsadmm,
    update_q_closed_form,
    update_duals,
    update_p_gsam,
    init_aux,
    gsadmm_epoch,
    gsam_epoch,
    baseline_epoch,
    evaluate,
    constraint_residual,
    full_objective,
)

__all__ = [
    # Schemas
    "InnerOptimizer",
    "Sampling",
    "AuxMode",
    "Hyperparams",
    "AdamMoments",
    "AuxState",
    "TrainState",
    "HiddenRole",
    "LastRole",

    # Objectives
    "penalty_omega",
    "augmented_lagrangian",
    "objective_F",

    # Services
    "sample_batch",
    "epoch_batches",
    "update_weights",
    "update_p_gsadmm",
    "update_q_closed_form",
    "update_duals",
    "update_p_gsam",
    "init_aux",
    "gsadmm_epoch",
    "gsam_epoch",
    "baseline_epoch",
    "evaluate",
    "constraint_residual",
    "full_objective",
]
