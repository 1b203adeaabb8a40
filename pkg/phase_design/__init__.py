from .crlb import (
    CrlbObjective,
    CrlbValue,
    PhaseDesignError,
    SteeringJacobian,
    crlb,
    crlb_rmse_deg,
    projected_information,
    steering_jacobian,
)
from .snr_max import random_phases, snr_max_phases
from .solvers import (
    ManifoldOptimizerConfig,
    ManifoldResult,
    ScaledCrlbCost,
    TraceRow,
    optimize_phases_crlb,
    write_trace_csv,
)

__all__ = [
    "CrlbObjective",
    "CrlbValue",
    "ManifoldOptimizerConfig",
    "ManifoldResult",
    "PhaseDesignError",
    "ScaledCrlbCost",
    "SteeringJacobian",
    "TraceRow",
    "crlb",
    "crlb_rmse_deg",
    "optimize_phases_crlb",
    "projected_information",
    "random_phases",
    "snr_max_phases",
    "steering_jacobian",
    "write_trace_csv",
]
