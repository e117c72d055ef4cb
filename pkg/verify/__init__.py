# Verify Package
# Oracles for the update equations, gradients and the approximation-error bound

from .schemas import (
    BoundReport,
    CheckResult,
    VerifyReport,
)

from .services import (
    SUITE_CHECKS,
    grad_check,
    q_argmin_oracle,
    check_theorem1,
    loss_lipschitz_bound,
    theorem1_rhs,
    random_instance,
    instance_gradient_errors,
    check_sgd_reduction,
    penalty_tracking_gap,
    dual_residual_trace,
    run_suite,
)

__all__ = [
    # Schemas
    "BoundReport",
    "CheckResult",
    "VerifyReport",

    # Services
    "SUITE_CHECKS",
    "grad_check",
    "q_argmin_oracle",
    "check_theorem1",
    "loss_lipschitz_bound",
    "theorem1_rhs",
    "random_instance",
    "instance_gradient_errors",
    "check_sgd_reduction",
    "penalty_tracking_gap",
    "dual_residual_trace",
    "run_suite",
]
