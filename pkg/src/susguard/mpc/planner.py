"""Goal-tracking and backup-tracking MPC with region-avoidance injection.

Both planners perform a single convexification pass per control step:
linearize the dynamics about the shifted previous plan (cold start: hold
the current state under hover thrust), assemble one structured QP, solve,
and emit the first control saturated to the actuator box.

Decision variables per horizon step t are (u_t, x_{t+1}, delta_{t+1},
delta'_{t+1}) interleaved, which keeps the normal-equation matrix banded.
The deltas are per-step nonnegative slacks charged linearly in the cost:
delta relaxes the room box and delta' the region-avoidance rows. Keeping
the families on separate slacks matters because a plan forced to violate
the avoidance rows (for example when the current state is already inside
the region) must not get the room box loosened for free.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, replace

try:
    import tomllib
except ModuleNotFoundError:  # 3.10
    import tomli as tomllib

import numpy as np
import scipy.sparse as sp

from ..errors import ConfigError, EmptyBackupSetError, QpSolveError
from ..geometry import SusRegion, region_contains_batch, select_separating_halfspace
from ..quad.dynamics import (
    F_MAX,
    OMEGA_MAX,
    U_HOVER,
    QuadControl,
    QuadState,
    dynamics_jacobians,
    saturate,
    step_vector,
)
from .qp import QpProblem, solve_qp_full
from .riccati import solve_dare

NX, NU = 9, 4
_BLOCK = NX + NU + 2  # (u_t, x_{t+1}, delta_{t+1}, delta'_{t+1})


@dataclass(frozen=True)
class MpcConfig:
    horizon: int = 20
    dt: float = 0.05
    q_p: float = 1.0
    q_z: float = 1.0
    q_e: float = 0.5
    q_v: float = 50.0
    q_f: float = 0.1
    q_w: float = 0.5
    slack_weight: float = 1e4
    room_slack_weight: float = 1e4
    slack_quadratic: float = 1.0  # small curvature keeps the L1 kink solver-friendly
    f_max: float = F_MAX
    omega_max: float = OMEGA_MAX
    room_lo: np.ndarray = field(default_factory=lambda: np.array([-5.0, -5.0, 0.0]))
    room_hi: np.ndarray = field(default_factory=lambda: np.array([5.0, 5.0, 4.0]))
    attitude_max: float | None = None  # roll/pitch bound; None disables the rows
    goal_state: np.ndarray | None = None
    smoothness_weight: np.ndarray | None = None  # optional S on control differences
    halfspace_margin: float = 1e-6
    release_steps: int = 100
    release_distance: float = 0.2
    nearest_metric: str = "state"  # "state" (9-D) or "position"
    naive_constrained: bool = False
    yaw_alignment: bool = False
    solver_tolerance: float = 1e-6
    solver_max_iters: int = 20000

    def __post_init__(self) -> None:
        object.__setattr__(self, "room_lo", np.asarray(self.room_lo, dtype=float).ravel())
        object.__setattr__(self, "room_hi", np.asarray(self.room_hi, dtype=float).ravel())
        if self.goal_state is not None:
            object.__setattr__(self, "goal_state", np.asarray(self.goal_state, dtype=float).ravel())
        if self.smoothness_weight is not None:
            s = np.broadcast_to(np.asarray(self.smoothness_weight, dtype=float), (NU,)).copy()
            if (s < 0).any():
                raise ConfigError("smoothness_weight must be nonnegative")
            object.__setattr__(self, "smoothness_weight", s)
        if self.horizon < 2:
            raise ConfigError("horizon must be >= 2")
        for name in ("q_p", "q_z", "q_e", "q_v", "q_f", "q_w", "slack_weight", "room_slack_weight"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.slack_quadratic < 0:
            raise ConfigError("slack_quadratic must be nonnegative")
        if self.nearest_metric not in ("state", "position"):
            raise ConfigError("nearest_metric must be 'state' or 'position'")
        if self.attitude_max is not None and not 0.0 < self.attitude_max < np.pi / 2:
            raise ConfigError("attitude_max must lie in (0, pi/2)")

    def state_weights(self, backup: bool = False) -> np.ndarray:
        q_v = 0.5 if backup else self.q_v
        return np.array([self.q_p, self.q_p, self.q_z, self.q_e, self.q_e, self.q_e, q_v, q_v, q_v])

    def control_weights(self) -> np.ndarray:
        return np.array([self.q_f, self.q_w, self.q_w, self.q_w])


def mpc_config_from_dict(doc: dict) -> MpcConfig:
    """MpcConfig from a parsed config document.

    Reads the [mpc] table; absent keys keep their defaults. goal_state and
    room bounds fall back to the document's environment tables when present,
    so one file can configure the simulator and the planner together.
    """
    table = dict(doc.get("mpc", {}))
    if "goal_state" not in table and "goal" in doc:
        goal = doc["goal"]
        table["goal_state"] = list(goal["p"]) + list(goal.get("theta", [0, 0, 0])) + list(goal.get("v", [0, 0, 0]))
    if "room_lo" not in table and "room" in doc:
        table["room_lo"] = doc["room"]["lo"]
        table["room_hi"] = doc["room"]["hi"]
    if "dt" not in table and "dt" in doc:
        table["dt"] = doc["dt"]
    known = {f.name for f in dataclasses.fields(MpcConfig)}
    unknown = set(table) - known
    if unknown:
        raise ConfigError(f"unknown mpc config keys: {sorted(unknown)}")
    return MpcConfig(**table)


def load_mpc_config(path: str) -> MpcConfig:
    with open(path, "rb") as fh:
        return mpc_config_from_dict(tomllib.load(fh))


def linearize_dynamics(x_bar: np.ndarray, u_bar: np.ndarray, dt: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Affine model of the Euler step about (x_bar, u_bar): x+ = A x + B u + C."""
    x_bar = np.asarray(x_bar, dtype=float).ravel()
    u_bar = np.asarray(u_bar, dtype=float).ravel()
    A, B = dynamics_jacobians(x_bar, u_bar, dt)
    C = step_vector(x_bar, u_bar, dt) - A @ x_bar - B @ u_bar
    return A, B, C


@dataclass
class WarmStart:
    """Shifted previous plan used as the SCP linearization trajectory."""

    states: np.ndarray  # (H+1, 9), states[0] = x0 of the previous solve
    controls: np.ndarray  # (H, 4)
    duals: np.ndarray | None = None

    @staticmethod
    def cold(x0: np.ndarray, horizon: int) -> "WarmStart":
        return WarmStart(
            states=np.tile(np.asarray(x0, dtype=float), (horizon + 1, 1)),
            controls=np.tile(U_HOVER, (horizon, 1)),
            duals=None,
        )

    def shifted(self, x0: np.ndarray) -> "WarmStart":
        states = np.vstack([x0, self.states[2:], self.states[-1:]])
        controls = np.vstack([self.controls[1:], self.controls[-1:]])
        return WarmStart(states=states, controls=controls, duals=self.duals)


def terminal_cost(config: MpcConfig, backup: bool = False) -> np.ndarray:
    """Hover-linearized DARE solution for the mode's stage weights."""
    A, B = dynamics_jacobians(np.zeros(9), U_HOVER, config.dt)
    return solve_dare(A, B, np.diag(config.state_weights(backup)), np.diag(config.control_weights()))


def _avoidance_rows(region: SusRegion | None, warm_states: np.ndarray, config: MpcConfig):
    """(a, b) per polytope per step, selected at the warm-start states.

    Components that already contain the current state are skipped: their
    rows start infeasible, and the nearest-face escape direction they
    induce can point anywhere, including out of the room. Getting clear of
    a component the vehicle is inside is the tracking objective's job; the
    rows for the remaining components still separate the plan from them.
    """
    if region is None or region.n_components == 0:
        return None
    if region.form != "polyhedra":
        raise ConfigError("avoidance constraints need a polyhedral region")
    x_now = warm_states[0]
    polys = [p for p in region.polytopes if not p.contains(x_now)]
    if not polys:
        return None
    H = config.horizon
    As = np.empty((H, len(polys), NX))
    bs = np.empty((H, len(polys)))
    for t in range(H):
        for i, poly in enumerate(polys):
            a, b = select_separating_halfspace(poly, warm_states[t + 1])
            As[t, i] = a
            bs[t, i] = b
    return As, bs


def _assemble(
    x0: np.ndarray,
    refs: np.ndarray,
    config: MpcConfig,
    warm: WarmStart,
    backup: bool,
    avoid,
    terminal_P: np.ndarray,
) -> QpProblem:
    H = config.horizon
    n = _BLOCK * H

    def iu(t):
        return _BLOCK * t

    def ix(t):  # planned state x_{t+1}
        return _BLOCK * t + NU

    def idl(t):  # room slack delta_{t+1}
        return _BLOCK * t + NU + NX

    def ida(t):  # avoidance slack delta'_{t+1}; separate so one constraint
        return _BLOCK * t + NU + NX + 1  # family cannot spend the other's slack

    qw = config.state_weights(backup)
    rw = config.control_weights()

    # cost: ||x_t - ref_t||^2_Q + ||u_t - u_hover||^2_R + w |delta_t|
    p_rows, p_cols, p_vals = [], [], []
    qvec = np.zeros(n)
    for t in range(H):
        ui = iu(t)
        p_rows.extend(range(ui, ui + NU))
        p_cols.extend(range(ui, ui + NU))
        p_vals.extend(2.0 * rw)
        qvec[ui : ui + NU] = -2.0 * rw * U_HOVER
        xi = ix(t)
        if t < H - 1:
            p_rows.extend(range(xi, xi + NX))
            p_cols.extend(range(xi, xi + NX))
            p_vals.extend(2.0 * qw)
            qvec[xi : xi + NX] = -2.0 * qw * refs[t + 1]
        else:
            rr, cc = np.meshgrid(range(xi, xi + NX), range(xi, xi + NX), indexing="ij")
            p_rows.extend(rr.ravel())
            p_cols.extend(cc.ravel())
            p_vals.extend((2.0 * terminal_P).ravel())
            qvec[xi : xi + NX] = -2.0 * terminal_P @ refs[H]
        qvec[idl(t)] = config.room_slack_weight
        qvec[ida(t)] = config.slack_weight
        if config.slack_quadratic > 0:
            for sl in (idl(t), ida(t)):
                p_rows.append(sl)
                p_cols.append(sl)
                p_vals.append(2.0 * config.slack_quadratic)
    if config.smoothness_weight is not None:
        s = config.smoothness_weight
        for t in range(1, H):
            for j in range(NU):
                a, b = iu(t - 1) + j, iu(t) + j
                p_rows.extend([a, b, a, b])
                p_cols.extend([a, b, b, a])
                p_vals.extend([2.0 * s[j], 2.0 * s[j], -2.0 * s[j], -2.0 * s[j]])
    P = sp.csc_matrix((p_vals, (p_rows, p_cols)), shape=(n, n))

    a_rows, a_cols, a_vals = [], [], []
    lo, up = [], []
    row = 0

    def add_entries(r, cols, vals):
        a_rows.extend([r] * len(cols))
        a_cols.extend(cols)
        a_vals.extend(vals)

    # dynamics equalities, linearized about the warm-start trajectory
    for t in range(H):
        u_bar = warm.controls[t]
        x_bar = x0 if t == 0 else warm.states[t]
        A, B, C = linearize_dynamics(x_bar, u_bar, config.dt)
        for r in range(NX):
            cols = list(range(iu(t), iu(t) + NU)) + [ix(t) + r]
            vals = list(B[r]) + [-1.0]
            if t > 0:
                cols += list(range(ix(t - 1), ix(t - 1) + NX))
                vals += list(A[r])
            add_entries(row, cols, vals)
            rhs = -C[r] - (A[r] @ x0 if t == 0 else 0.0)
            lo.append(rhs)
            up.append(rhs)
            row += 1

    # control box
    for t in range(H):
        for j in range(NU):
            add_entries(row, [iu(t) + j], [1.0])
            if j == 0:
                lo.append(0.0)
                up.append(config.f_max)
            else:
                lo.append(-config.omega_max)
                up.append(config.omega_max)
            row += 1

    # room bounds on position, relaxed by the step slack: lo - d <= p <= hi + d
    for t in range(H):
        for j in range(3):
            add_entries(row, [ix(t) + j, idl(t)], [1.0, -1.0])
            lo.append(-np.inf)
            up.append(config.room_hi[j])
            row += 1
            add_entries(row, [ix(t) + j, idl(t)], [-1.0, -1.0])
            lo.append(-np.inf)
            up.append(-config.room_lo[j])
            row += 1

    # roll/pitch box, hard like the control box: the attitude chart must stay
    # well conditioned, so the step slack does not apply here
    if config.attitude_max is not None:
        for t in range(H):
            for j in (3, 4):
                add_entries(row, [ix(t) + j], [1.0])
                lo.append(-config.attitude_max)
                up.append(config.attitude_max)
                row += 1

    # slack nonnegativity
    for t in range(H):
        for sl in (idl(t), ida(t)):
            add_entries(row, [sl], [1.0])
            lo.append(0.0)
            up.append(np.inf)
            row += 1

    # region avoidance: a . x_t >= b + margin - delta'_t per polytope
    if avoid is not None:
        As, bs = avoid
        for t in range(H):
            for i in range(As.shape[1]):
                add_entries(row, list(range(ix(t), ix(t) + NX)) + [ida(t)], list(As[t, i]) + [1.0])
                lo.append(bs[t, i] + config.halfspace_margin)
                up.append(np.inf)
                row += 1

    A_mat = sp.csc_matrix((a_vals, (a_rows, a_cols)), shape=(row, n))
    layout = {"horizon": H, "block": _BLOCK, "n_avoid": 0 if avoid is None else int(avoid[0].shape[1])}
    return QpProblem(P=P, q=qvec, A=A_mat, l=np.array(lo), u=np.array(up), layout=layout, validate=False)


def _solve_plan(problem: QpProblem, config: MpcConfig, warm: WarmStart, x0: np.ndarray):
    H = config.horizon
    z0 = np.zeros(problem.n)
    for t in range(H):
        z0[_BLOCK * t : _BLOCK * t + NU] = warm.controls[t]
        z0[_BLOCK * t + NU : _BLOCK * t + NU + NX] = warm.states[t + 1]
    warm_y = warm.duals if warm.duals is not None and len(warm.duals) == problem.m else None
    sol = solve_qp_full(
        problem,
        tolerance=config.solver_tolerance,
        max_iters=config.solver_max_iters,
        warm_x=z0,
        warm_y=warm_y,
    )
    if sol.status == "infeasible":
        raise QpSolveError("planner QP reported infeasible despite slack relaxation")
    if sol.status == "max_iters" and max(sol.residuals.values()) > 1e3 * config.solver_tolerance:
        raise QpSolveError(f"planner QP did not converge: residuals {sol.residuals}")
    u0 = saturate(sol.x[:NU])
    plan = sol.x.reshape(H, _BLOCK)[:, NU : NU + NX].copy()
    controls = sol.x.reshape(H, _BLOCK)[:, :NU].copy()
    new_warm = WarmStart(states=np.vstack([x0, plan]), controls=controls, duals=sol.y.copy())
    return u0, plan, new_warm


def plan_goal_mpc(
    x0: np.ndarray,
    goal: np.ndarray,
    config: MpcConfig,
    warm_start: WarmStart | None = None,
    sus_region: SusRegion | None = None,
    terminal_P: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray, WarmStart]:
    """One SCP pass of the goal tracker; optional region rows for the
    naive-constrained ablation. Returns (u0, planned x_{1:H}, warm')."""
    x0 = np.asarray(x0, dtype=float).ravel()
    goal = np.asarray(goal, dtype=float).ravel()
    warm = WarmStart.cold(x0, config.horizon) if warm_start is None else warm_start.shifted(x0)
    refs = np.tile(goal, (config.horizon + 1, 1))
    if terminal_P is None:
        terminal_P = terminal_cost(config, backup=False)
    avoid = _avoidance_rows(sus_region, warm.states, config)
    problem = _assemble(x0, refs, config, warm, backup=False, avoid=avoid, terminal_P=terminal_P)
    return _solve_plan(problem, config, warm, x0)


def plan_backup_mpc(
    x0: np.ndarray,
    targets: np.ndarray,
    sus_region: SusRegion | None,
    config: MpcConfig,
    warm_start: WarmStart | None = None,
    terminal_P: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray, WarmStart]:
    """One SCP pass of the backup tracker with region avoidance rows."""
    x0 = np.asarray(x0, dtype=float).ravel()
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    if targets.shape != (config.horizon + 1, NX):
        raise ConfigError(f"targets must be ({config.horizon + 1}, {NX})")
    warm = WarmStart.cold(x0, config.horizon) if warm_start is None else warm_start.shifted(x0)
    if terminal_P is None:
        terminal_P = terminal_cost(config, backup=True)
    avoid = _avoidance_rows(sus_region, warm.states, config)
    problem = _assemble(x0, targets, config, warm, backup=True, avoid=avoid, terminal_P=terminal_P)
    return _solve_plan(problem, config, warm, x0)


# -- guarded policy ------------------------------------------------------------


@dataclass
class GuardedPolicyState:
    mode: str = "nominal"  # nominal | backup
    t_w: int | None = None
    backup_traj: np.ndarray | None = None  # states of tau_B
    t_B: int = 0
    backup_elapsed: int = 0
    goal_warm: WarmStart | None = None
    backup_warm: WarmStart | None = None


def build_backup_set(dataset, sus_region: SusRegion | None):
    """Safe-labeled trajectories no state of which lies in the region."""
    out = []
    for rec in dataset:
        if rec.label != "safe":
            continue
        if sus_region is not None and sus_region.n_components > 0:
            if bool(region_contains_batch(sus_region, rec.states).any()):
                continue
        out.append(rec)
    return out


def _metric_view(states: np.ndarray, config: MpcConfig) -> np.ndarray:
    return states[:, :3] if config.nearest_metric == "position" else states


def _nearest_backup_index(x0: np.ndarray, backup_set, config: MpcConfig) -> tuple[int, int]:
    x_view = _metric_view(x0[None, :], config)[0]
    best = (np.inf, 0, 0)
    for j, rec in enumerate(backup_set):
        pts = _metric_view(rec.states, config)
        d2 = ((pts - x_view[None, :]) ** 2).sum(axis=1)
        i = int(np.argmin(d2))
        if d2[i] < best[0]:
            best = (float(d2[i]), j, i)
    return best[1], best[2]


def _backup_targets(traj_states: np.ndarray, t_B: int, horizon: int) -> np.ndarray:
    idx = np.minimum(np.arange(t_B, t_B + horizon + 1), len(traj_states) - 1)
    return traj_states[idx]


def guarded_policy_step(
    state: np.ndarray,
    guard: GuardedPolicyState,
    sus_region: SusRegion | None,
    backup_set,
    config: MpcConfig,
    terminal_P_goal: np.ndarray | None = None,
    terminal_P_backup: np.ndarray | None = None,
) -> tuple[np.ndarray, GuardedPolicyState]:
    """One control step of the guarded policy.

    Nominal mode plans toward the goal and switches to backup tracking when
    the look-ahead plan enters the region, recording the earliest alert
    step t_w. Backup mode tracks the nearest stored safe trajectory with
    avoidance rows injected, releasing after release_steps or once close
    enough to it and past t_w. With naive_constrained set, avoidance rows go
    straight into the nominal planner and no switching happens.
    """
    if config.goal_state is None:
        raise ConfigError("config.goal_state required for the guarded policy")
    x0 = np.asarray(state, dtype=float).ravel()

    if guard.mode == "backup":
        pts = _metric_view(guard.backup_traj, config)
        x_view = _metric_view(x0[None, :], config)[0]
        dist = float(np.sqrt(((pts - x_view[None, :]) ** 2).sum(axis=1).min()))
        released = guard.backup_elapsed >= config.release_steps or (
            dist <= config.release_distance and guard.t_w is not None and guard.backup_elapsed >= guard.t_w
        )
        if not released:
            t_B = guard.t_B + 1
            targets = _backup_targets(guard.backup_traj, t_B, config.horizon)
            u0, _, warm = plan_backup_mpc(
                x0, targets, sus_region, config, guard.backup_warm, terminal_P=terminal_P_backup
            )
            return u0, replace(
                guard, t_B=t_B, backup_elapsed=guard.backup_elapsed + 1, backup_warm=warm
            )
        guard = replace(guard, mode="nominal", t_w=None, backup_traj=None, t_B=0, backup_elapsed=0,
                        backup_warm=None, goal_warm=None)

    naive_region = sus_region if config.naive_constrained else None
    u0, plan, warm = plan_goal_mpc(
        x0, config.goal_state, config, guard.goal_warm, sus_region=naive_region, terminal_P=terminal_P_goal
    )
    guard = replace(guard, goal_warm=warm)
    if config.naive_constrained or sus_region is None or sus_region.n_components == 0:
        return u0, guard

    inside = region_contains_batch(sus_region, plan)
    if not inside.any():
        return u0, guard

    t_w = int(np.argmax(inside)) + 1  # plan row t is state x_{t+1}
    if not backup_set:
        raise EmptyBackupSetError("look-ahead alert but no backup trajectory avoids the region")
    j, t_B = _nearest_backup_index(x0, backup_set, config)
    traj = backup_set[j].states
    targets = _backup_targets(traj, t_B, config.horizon)
    u0, _, bwarm = plan_backup_mpc(x0, targets, sus_region, config, None, terminal_P=terminal_P_backup)
    guard = replace(
        guard,
        mode="backup",
        t_w=t_w,
        backup_traj=traj,
        t_B=t_B,
        backup_elapsed=1,
        backup_warm=bwarm,
        goal_warm=None,
    )
    return u0, guard


# -- rollout-facing policy adapters ---------------------------------------------


class NominalMpcPolicy:
    """Goal-tracking MPC as a rollout policy."""

    mode = "nominal"

    def __init__(self, config: MpcConfig, sus_region: SusRegion | None = None):
        if config.goal_state is None:
            raise ConfigError("config.goal_state required")
        self._config = config
        self._region = sus_region
        self._terminal = terminal_cost(config, backup=False)
        self._warm: WarmStart | None = None

    def reset(self) -> None:
        self._warm = None

    def __call__(self, x: np.ndarray, t: int, rng) -> np.ndarray:
        u0, _, self._warm = plan_goal_mpc(
            x, self._config.goal_state, self._config, self._warm,
            sus_region=self._region, terminal_P=self._terminal,
        )
        return u0


class GuardedMpcPolicy:
    """Guarded policy (nominal + backup switching) as a rollout policy."""

    def __init__(self, config: MpcConfig, sus_region: SusRegion | None, backup_set):
        if config.goal_state is None:
            raise ConfigError("config.goal_state required")
        self._config = config
        self._region = sus_region
        self._backup_set = backup_set
        self._terminal_goal = terminal_cost(config, backup=False)
        self._terminal_backup = terminal_cost(config, backup=True)
        self.guard = GuardedPolicyState()

    def reset(self) -> None:
        self.guard = GuardedPolicyState()

    @property
    def mode(self) -> str:
        return self.guard.mode

    def __call__(self, x: np.ndarray, t: int, rng) -> np.ndarray:
        u0, self.guard = guarded_policy_step(
            x, self.guard, self._region, self._backup_set, self._config,
            terminal_P_goal=self._terminal_goal, terminal_P_backup=self._terminal_backup,
        )
        return u0
