"""Safe model-based RL: world model, constrained policy, safe-improvement planner."""

from ._core import (
    ConfigError,
    EvalSummary,
    GridCMDP,
    GridConfig,
    LagrangianState,
    PointHazardConfig,
    PointHazardEnv,
    RunConfig,
    StepResult,
    Trainer,
    TrainingError,
    oracle_check,
    penalty_update,
    psi_and_multiplier,
    run_ablation,
    simnorm,
    symexp,
    symlog,
)

__all__ = [
    "ConfigError",
    "EvalSummary",
    "GridCMDP",
    "GridConfig",
    "LagrangianState",
    "PointHazardConfig",
    "PointHazardEnv",
    "RunConfig",
    "StepResult",
    "Trainer",
    "TrainingError",
    "oracle_check",
    "penalty_update",
    "psi_and_multiplier",
    "run_ablation",
    "simnorm",
    "symexp",
    "symlog",
]
