"""Deterministic 9-state quadcopter dynamics.

State x = (p, Theta, v): position [m], ZYX Euler angles roll/pitch/yaw
[rad], and linear velocity [m/s]. Control u = (F, omega): mass-normalized
thrust [m/s^2] and body rates [rad/s]. Continuous dynamics

    p_dot = v
    v_dot = R(Theta) e3 F - g e3
    Theta_dot = T(Theta) omega

are discretized with one explicit Euler step on the full state vector, so
position integrates the pre-step velocity. No drag, no noise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import GimbalSingularityError

GRAVITY = 9.81
DT_DEFAULT = 0.05
F_MAX = 24.8
OMEGA_MAX = 5.0
# hover equilibrium input: thrust exactly cancels gravity at level attitude
U_HOVER = np.array([GRAVITY, 0.0, 0.0, 0.0])

_PITCH_LIMIT = np.pi / 2 - 1e-6


def wrap_angles(theta: np.ndarray | float) -> np.ndarray | float:
    """Wrap angles to (-pi, pi]."""
    return np.asarray(theta) - 2.0 * np.pi * np.ceil((np.asarray(theta) - np.pi) / (2.0 * np.pi))


@dataclass(frozen=True)
class QuadState:
    p: np.ndarray
    theta: np.ndarray
    v: np.ndarray

    def __post_init__(self) -> None:
        for name in ("p", "theta", "v"):
            arr = np.asarray(getattr(self, name), dtype=float).ravel()
            if arr.shape != (3,):
                raise ValueError(f"{name} must be a 3-vector")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "theta", np.asarray(wrap_angles(self.theta)))

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.p, self.theta, self.v])

    @staticmethod
    def from_vector(x: np.ndarray) -> "QuadState":
        x = np.asarray(x, dtype=float).ravel()
        if x.shape != (9,):
            raise ValueError("state vector must have 9 entries")
        return QuadState(p=x[:3], theta=x[3:6], v=x[6:9])

    @staticmethod
    def hover(p: np.ndarray) -> "QuadState":
        return QuadState(p=np.asarray(p, dtype=float), theta=np.zeros(3), v=np.zeros(3))


@dataclass(frozen=True)
class QuadControl:
    F: float
    omega: np.ndarray

    def __post_init__(self) -> None:
        om = np.asarray(self.omega, dtype=float).ravel()
        if om.shape != (3,):
            raise ValueError("omega must be a 3-vector")
        object.__setattr__(self, "F", float(self.F))
        object.__setattr__(self, "omega", om)

    def as_vector(self) -> np.ndarray:
        return np.concatenate([[self.F], self.omega])

    @staticmethod
    def from_vector(u: np.ndarray) -> "QuadControl":
        u = np.asarray(u, dtype=float).ravel()
        if u.shape != (4,):
            raise ValueError("control vector must have 4 entries")
        return QuadControl(F=u[0], omega=u[1:])


def saturate(u: np.ndarray) -> np.ndarray:
    """Clip a control vector to the actuator box [0, F_MAX] x [-OMEGA_MAX, OMEGA_MAX]^3."""
    u = np.asarray(u, dtype=float).ravel()
    out = u.copy()
    out[0] = min(max(out[0], 0.0), F_MAX)
    out[1:] = np.clip(out[1:], -OMEGA_MAX, OMEGA_MAX)
    return out


def rotation_body_z(theta: np.ndarray) -> np.ndarray:
    """Third column of the ZYX rotation matrix: thrust direction in world frame."""
    sphi, cphi = np.sin(theta[0]), np.cos(theta[0])
    sth, cth = np.sin(theta[1]), np.cos(theta[1])
    spsi, cpsi = np.sin(theta[2]), np.cos(theta[2])
    return np.array(
        [
            cpsi * sth * cphi + spsi * sphi,
            spsi * sth * cphi - cpsi * sphi,
            cth * cphi,
        ]
    )


def euler_rate_matrix(theta: np.ndarray) -> np.ndarray:
    """T(Theta) mapping body rates to ZYX Euler-angle rates."""
    if abs(theta[1]) > _PITCH_LIMIT:
        raise GimbalSingularityError(f"pitch {theta[1]:.6f} rad too close to +-pi/2")
    sphi, cphi = np.sin(theta[0]), np.cos(theta[0])
    tth = np.tan(theta[1])
    cth = np.cos(theta[1])
    return np.array(
        [
            [1.0, sphi * tth, cphi * tth],
            [0.0, cphi, -sphi],
            [0.0, sphi / cth, cphi / cth],
        ]
    )


def step_vector(x: np.ndarray, u: np.ndarray, dt: float = DT_DEFAULT) -> np.ndarray:
    """One explicit Euler step on a packed (9,) state with a packed (4,) control."""
    p, theta, v = x[:3], x[3:6], x[6:9]
    zb = rotation_body_z(theta)
    T = euler_rate_matrix(theta)
    out = np.empty(9)
    out[:3] = p + dt * v
    out[3:6] = wrap_angles(theta + dt * (T @ u[1:]))
    out[6:9] = v + dt * (zb * u[0] - np.array([0.0, 0.0, GRAVITY]))
    return out


def step_dynamics(x: QuadState, u: QuadControl, dt: float = DT_DEFAULT) -> QuadState:
    """Typed wrapper over step_vector."""
    return QuadState.from_vector(step_vector(x.as_vector(), u.as_vector(), dt))


def dynamics_jacobians(x: np.ndarray, u: np.ndarray, dt: float = DT_DEFAULT) -> tuple[np.ndarray, np.ndarray]:
    """Analytic Jacobians A = d(step)/dx, B = d(step)/du of the Euler step.

    Row/column order matches the packed state (p, Theta, v) and control
    (F, omega).
    """
    theta = x[3:6]
    F = u[0]
    om = u[1:]
    sphi, cphi = np.sin(theta[0]), np.cos(theta[0])
    sth, cth = np.sin(theta[1]), np.cos(theta[1])
    spsi, cpsi = np.sin(theta[2]), np.cos(theta[2])
    if abs(theta[1]) > _PITCH_LIMIT:
        raise GimbalSingularityError(f"pitch {theta[1]:.6f} rad too close to +-pi/2")
    tth = sth / cth

    # d(R e3)/dTheta, columns = (phi, theta, psi)
    dz = np.array(
        [
            [-cpsi * sth * sphi + spsi * cphi, cpsi * cth * cphi, -spsi * sth * cphi + cpsi * sphi],
            [-spsi * sth * sphi - cpsi * cphi, spsi * cth * cphi, cpsi * sth * cphi + spsi * sphi],
            [-cth * sphi, -sth * cphi, 0.0],
        ]
    )

    # d(T(Theta) omega)/dTheta; the psi column is zero
    g1 = sphi * om[1] + cphi * om[2]
    g2 = cphi * om[1] - sphi * om[2]
    dT = np.array(
        [
            [g2 * tth, g1 / (cth * cth), 0.0],
            [-g1, 0.0, 0.0],
            [g2 / cth, g1 * sth / (cth * cth), 0.0],
        ]
    )

    A = np.eye(9)
    A[:3, 6:9] += dt * np.eye(3)
    A[3:6, 3:6] += dt * dT
    A[6:9, 3:6] = dt * F * dz

    B = np.zeros((9, 4))
    B[3:6, 1:] = dt * euler_rate_matrix(theta)
    B[6:9, 0] = dt * rotation_body_z(theta)
    return A, B
