"""Rollout engine, oracle labeling, and dataset collection.

A rollout terminates on the first of: oracle-unsafe (obstacle hit or room
exit), goal reached, monitor alert, or timeout; a policy raising a solver
error terminates as policy_failure. Unsafe trajectories are truncated at
their error state, so the last recorded state is the labeled one even under
retroactive preemption.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import (
    CollectionBudgetError,
    ConfigError,
    EmptyBackupSetError,
    GimbalSingularityError,
    QpSolveError,
)
from .dynamics import QuadState, step_vector
from .env import Environment, goal_reached

TERMINATIONS = ("goal", "unsafe", "timeout", "alert", "policy_failure")
LABELS = ("safe", "unsafe", "unlabeled")
LABELERS = ("oracle", "human", "none")

_POLICY_FAULTS = (QpSolveError, EmptyBackupSetError, GimbalSingularityError)


@dataclass(frozen=True)
class TrajectoryRecord:
    id: str
    states: np.ndarray  # (T+1, 9)
    actions: np.ndarray  # (T, 4)
    dt: float
    termination: str
    label: str
    labeler: str
    error_state_index: int | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        states = np.atleast_2d(np.asarray(self.states, dtype=float))
        actions = np.asarray(self.actions, dtype=float).reshape(-1, 4) if np.size(self.actions) else np.empty((0, 4))
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "actions", actions)
        if len(self.actions) != len(self.states) - 1:
            raise ConfigError("need |actions| = |states| - 1")
        if self.termination not in TERMINATIONS:
            raise ConfigError(f"unknown termination {self.termination!r}")
        if self.label not in LABELS:
            raise ConfigError(f"unknown label {self.label!r}")
        if self.labeler not in LABELERS:
            raise ConfigError(f"unknown labeler {self.labeler!r}")
        if self.termination == "unsafe":
            if self.label != "unsafe" or self.error_state_index != len(self.states) - 1:
                raise ConfigError("unsafe termination must label its final state")

    @property
    def n_steps(self) -> int:
        return len(self.actions)

    def state(self, i: int) -> QuadState:
        return QuadState.from_vector(self.states[i])

    @property
    def error_state(self) -> np.ndarray | None:
        if self.error_state_index is None:
            return None
        return self.states[self.error_state_index]


@dataclass(frozen=True)
class OracleLabeler:
    """Collision oracle with preemptive margin and retroactive truncation.

    margin inflates every obstacle, flagging states within `margin` of a
    face; retroactive_k marks the state k steps before the detected
    collision as the error state and discards the rest.
    """

    margin: float = 0.0
    retroactive_k: int = 0

    def __post_init__(self) -> None:
        if self.margin < 0 or self.retroactive_k < 0:
            raise ConfigError("margin and retroactive_k must be nonnegative")

    def unsafe_now(self, x: np.ndarray, env: Environment) -> bool:
        p = x[:3]
        return (not env.in_room(p)) or env.hits_obstacle(p, self.margin)


def _seed_tuple(seed) -> tuple:
    return tuple(seed) if isinstance(seed, (tuple, list)) else (int(seed),)


def rollout(
    policy,
    env: Environment,
    seed,
    monitor=None,
    labeler: OracleLabeler | None = None,
    traj_id: str | None = None,
    start_state: QuadState | None = None,
) -> TrajectoryRecord:
    """Execute the policy until the first termination condition fires.

    Per-step termination priority: unsafe, then goal, then alert; timeout
    fires once t_max actions were taken without any of those. The RNG
    stream is derived from (env.start_sampler.seed, *seed) and feeds both
    the start draw and any stochastic policy.
    """
    labeler = labeler or OracleLabeler()
    seed_t = _seed_tuple(seed)
    rng = np.random.default_rng(np.random.SeedSequence((env.start_sampler.seed, *seed_t)))
    if traj_id is None:
        traj_id = "traj-" + "-".join(str(s) for s in seed_t)
    x = (start_state or env.start_sampler.sample(rng)).as_vector()
    if hasattr(policy, "reset"):
        policy.reset()

    states = [x]
    actions: list[np.ndarray] = []
    termination = None
    meta: dict = {"modes": []}
    while True:
        if labeler.unsafe_now(states[-1], env):
            termination = "unsafe"
            break
        if goal_reached(states[-1], env):
            termination = "goal"
            break
        if monitor is not None and monitor(states[-1]):
            termination = "alert"
            break
        if len(actions) >= env.t_max:
            termination = "timeout"
            break
        try:
            u = np.asarray(policy(states[-1], len(actions), rng), dtype=float).ravel()
            x_next = step_vector(states[-1], u, env.dt)
        except _POLICY_FAULTS as exc:
            termination = "policy_failure"
            meta["failure"] = f"{type(exc).__name__}: {exc}"
            break
        actions.append(u)
        states.append(x_next)
        if hasattr(policy, "mode"):
            meta["modes"].append(policy.mode)

    if termination == "unsafe":
        e = max(0, len(states) - 1 - labeler.retroactive_k)
        states = states[: e + 1]
        actions = actions[:e]
        return TrajectoryRecord(
            id=traj_id,
            states=np.asarray(states),
            actions=np.asarray(actions) if actions else np.empty((0, 4)),
            dt=env.dt,
            termination="unsafe",
            label="unsafe",
            labeler="oracle",
            error_state_index=e,
            meta=meta,
        )
    label = "safe" if termination in ("goal", "timeout") else "unlabeled"
    return TrajectoryRecord(
        id=traj_id,
        states=np.asarray(states),
        actions=np.asarray(actions) if actions else np.empty((0, 4)),
        dt=env.dt,
        termination=termination,
        label=label,
        labeler="oracle" if label == "safe" else "none",
        error_state_index=None,
        meta=meta,
    )


def collect_dataset(
    policy,
    env: Environment,
    seed: int,
    until_n_unsafe: int | None = None,
    total: int | None = None,
    monitor=None,
    labeler: OracleLabeler | None = None,
) -> list[TrajectoryRecord]:
    """Roll out until the stop rule is met; deterministic for a fixed seed."""
    if (until_n_unsafe is None) == (total is None):
        raise ConfigError("specify exactly one of until_n_unsafe / total")
    requested = until_n_unsafe if until_n_unsafe is not None else total
    if requested < 1:
        raise ConfigError("stop rule must be positive")

    records: list[TrajectoryRecord] = []
    n_unsafe = 0
    i = 0
    while True:
        if total is not None and len(records) >= total:
            return records
        if until_n_unsafe is not None and n_unsafe >= until_n_unsafe:
            return records
        if i >= 100 * requested:
            raise CollectionBudgetError(
                f"collected {n_unsafe} unsafe / {len(records)} total in {i} rollouts; "
                f"stop rule unreachable within 100x budget"
            )
        rec = rollout(
            policy,
            env,
            seed=(seed, i),
            monitor=monitor,
            labeler=labeler,
            traj_id=f"traj-{seed}-{i:05d}",
        )
        records.append(rec)
        if rec.label == "unsafe":
            n_unsafe += 1
        i += 1
