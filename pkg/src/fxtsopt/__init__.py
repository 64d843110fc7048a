"""Fixed-time sliding-mode flows for equality-constrained optimization.

The package builds continuous-time dynamics whose multiplier acts as a
sliding-mode controller driving the constraint residual to zero in fixed
time, with an optional convex-flow objective term that also certifies a
fixed-time bound to the optimum. A fixed-step RK4 integrator, bound
calculators, bundled scenarios, and a CLI harness sit on top.
"""

from .controllers import (
    ConvexFlowGains,
    DisturbanceSpec,
    FxtsGains,
    Law,
    capital_lambda_fxts,
    closed_loop_rhs,
    f1_direction,
    lambda_eq,
    lambda_fxts,
    lambda_sw,
    make_rhs,
    robust_switch,
    settling_bound_convex,
    settling_bound_nonconvex,
    settling_bound_robust,
    signed_power,
    sin_disturbance,
    switching_drive,
)
from .errors import (
    ConfigurationError,
    DimensionMismatchError,
    FxtsoptError,
    GainConditionError,
    InvalidNetworkError,
    NumericalBlowupError,
    OracleFailureError,
    SingularEvaluationError,
)
from .integrator import (
    IntegrationConfig,
    SweepResult,
    SweepRow,
    Trajectory,
    log_radius_sampler,
    simulate,
    simulate_batch,
    sweep_initial_conditions,
)
from .problem import (
    KktResidual,
    ProblemSpec,
    eval_objective,
    finite_difference_audit,
    gram,
    kkt_residual,
    multiplier_estimate,
    pinv_gram,
    pinv_psd,
    projector,
)
from .scenarios import SCENARIO_NAMES, Scenario, get_scenario

__version__ = "1.0.0"

__all__ = [
    "ConfigurationError",
    "ConvexFlowGains",
    "DimensionMismatchError",
    "DisturbanceSpec",
    "FxtsGains",
    "FxtsoptError",
    "GainConditionError",
    "IntegrationConfig",
    "InvalidNetworkError",
    "KktResidual",
    "Law",
    "NumericalBlowupError",
    "OracleFailureError",
    "ProblemSpec",
    "SCENARIO_NAMES",
    "Scenario",
    "SingularEvaluationError",
    "SweepResult",
    "SweepRow",
    "Trajectory",
    "capital_lambda_fxts",
    "closed_loop_rhs",
    "eval_objective",
    "f1_direction",
    "finite_difference_audit",
    "get_scenario",
    "gram",
    "kkt_residual",
    "lambda_eq",
    "lambda_fxts",
    "lambda_sw",
    "log_radius_sampler",
    "make_rhs",
    "multiplier_estimate",
    "pinv_gram",
    "pinv_psd",
    "projector",
    "robust_switch",
    "settling_bound_convex",
    "settling_bound_nonconvex",
    "settling_bound_robust",
    "signed_power",
    "simulate",
    "simulate_batch",
    "sin_disturbance",
    "sweep_initial_conditions",
    "switching_drive",
]
