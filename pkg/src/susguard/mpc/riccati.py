"""Discrete algebraic Riccati equation via fixed-point iteration."""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError, ConvergenceError


def dare_residual(A: np.ndarray, B: np.ndarray, Q: np.ndarray, R: np.ndarray, P: np.ndarray) -> float:
    """Infinity-norm defect of the DARE fixed-point equation at P."""
    BtPB = R + B.T @ P @ B
    gain = np.linalg.solve(BtPB, B.T @ P @ A)
    return float(np.max(np.abs(P - (Q + A.T @ P @ A - A.T @ P @ B @ gain))))


def solve_dare(
    A: np.ndarray,
    B: np.ndarray,
    Q: np.ndarray,
    R: np.ndarray,
    tolerance: float = 1e-10,
    max_iters: int = 100000,
) -> np.ndarray:
    """Iterate P <- Q + A'PA - A'PB (R + B'PB)^-1 B'PA from P = Q.

    Converges for stabilizable (A, B) with Q PSD, R PD; the result is
    symmetrized every step.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.asarray(B, dtype=float)
    if B.ndim == 1:
        B = B[:, None]
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    R = np.atleast_2d(np.asarray(R, dtype=float))
    n = A.shape[0]
    if A.shape != (n, n) or B.shape[0] != n or Q.shape != (n, n):
        raise ConfigError("inconsistent DARE dimensions")
    if np.linalg.eigvalsh(R)[0] <= 0:
        raise ConfigError("R must be positive definite")

    P = Q.copy()
    for _ in range(max_iters):
        BtPB = R + B.T @ P @ B
        gain = np.linalg.solve(BtPB, B.T @ P @ A)
        P_next = Q + A.T @ P @ A - A.T @ P @ B @ gain
        P_next = (P_next + P_next.T) / 2.0
        if np.max(np.abs(P_next - P)) <= tolerance:
            return P_next
        P = P_next
    raise ConvergenceError(f"Riccati iteration did not converge in {max_iters} iterations")
