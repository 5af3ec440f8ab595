"""Quadcopter simulation: dynamics, environments, rollouts, labeling, corpus IO."""

from .corpus import load_corpus, save_corpus, trajectory_from_json, trajectory_to_json
from .dynamics import (
    DT_DEFAULT,
    F_MAX,
    GRAVITY,
    OMEGA_MAX,
    U_HOVER,
    QuadControl,
    QuadState,
    dynamics_jacobians,
    euler_rate_matrix,
    rotation_body_z,
    saturate,
    step_dynamics,
    step_vector,
    wrap_angles,
)
from .env import (
    Box,
    Environment,
    RingSampler,
    Sphere,
    default_environment,
    environment_from_dict,
    environment_to_dict,
    goal_reached,
    load_environment,
    save_environment,
)
from .rollout import (
    TERMINATIONS,
    OracleLabeler,
    TrajectoryRecord,
    collect_dataset,
    rollout,
)

__all__ = [
    "DT_DEFAULT",
    "F_MAX",
    "GRAVITY",
    "OMEGA_MAX",
    "U_HOVER",
    "QuadControl",
    "QuadState",
    "dynamics_jacobians",
    "euler_rate_matrix",
    "rotation_body_z",
    "saturate",
    "step_dynamics",
    "step_vector",
    "wrap_angles",
    "Box",
    "Environment",
    "RingSampler",
    "Sphere",
    "default_environment",
    "environment_from_dict",
    "environment_to_dict",
    "goal_reached",
    "load_environment",
    "save_environment",
    "TERMINATIONS",
    "OracleLabeler",
    "TrajectoryRecord",
    "collect_dataset",
    "rollout",
]
