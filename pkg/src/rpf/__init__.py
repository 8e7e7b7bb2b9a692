"""Kalman and guaranteed-cost robust filters for tracking a resonant optical phase."""

from .analysis import (
    AugmentedSystem,
    ErrorCovariance,
    SweepAxis,
    SweepPoint,
    SweepResult,
    augment,
    closed_loop_error,
    default_delta_grid,
    evaluate,
    sql_sigma2,
    sweep,
)
from .errors import *  # noqa: F401,F403
from .filters import (
    EpsilonScanResult,
    FilterDesign,
    FilterKind,
    design_kalman,
    design_robust,
    optimize_epsilon,
    q_plus,
    robust_riccati,
)
from .model import (
    NOMINAL_ALPHA,
    NOMINAL_PARAMS,
    Delta,
    MeasurementModel,
    ProcessModel,
    ResonantParams,
    UncertaintyModel,
    build_dual_homodyne_measurement,
    build_homodyne_measurement,
    build_process_model,
    build_uncertainty,
    default_bode_grid,
    frequency_response,
    realize_plant,
)
from .sim import SimConfig, SimResult, plant_moments, simulate, simulate_sweep_point
from .solvers import (
    CareProblem,
    CareSolution,
    care_residual,
    is_hurwitz,
    lyapunov_residual,
    solve_care,
    solve_lyapunov,
)

__version__ = "0.1.0"
