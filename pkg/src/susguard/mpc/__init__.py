"""Structured QP solver, Riccati utilities, and the guarded MPC stack."""

from .planner import (
    GuardedMpcPolicy,
    GuardedPolicyState,
    MpcConfig,
    NominalMpcPolicy,
    WarmStart,
    build_backup_set,
    guarded_policy_step,
    linearize_dynamics,
    load_mpc_config,
    mpc_config_from_dict,
    plan_backup_mpc,
    plan_goal_mpc,
    terminal_cost,
)
from .qp import QpProblem, QpSolution, kkt_residuals, solve_qp, solve_qp_full
from .riccati import dare_residual, solve_dare

__all__ = [
    "GuardedMpcPolicy",
    "GuardedPolicyState",
    "MpcConfig",
    "NominalMpcPolicy",
    "QpProblem",
    "QpSolution",
    "WarmStart",
    "build_backup_set",
    "dare_residual",
    "guarded_policy_step",
    "kkt_residuals",
    "linearize_dynamics",
    "load_mpc_config",
    "mpc_config_from_dict",
    "plan_backup_mpc",
    "plan_goal_mpc",
    "solve_dare",
    "solve_qp",
    "solve_qp_full",
    "terminal_cost",
]
