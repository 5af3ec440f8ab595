"""Convex-QP solver: operator splitting with a banded direct solve.

Problems are posed as min 1/2 x'Px + q'x subject to l <= Ax <= u, with
equalities encoded as l = u. The iteration solves
(P + sigma I + A' diag(rho) A) once per step via a banded Cholesky
factorization, which is what makes the horizon-structured MPC problems
cheap; equality rows get a stiffer rho. Convergence and infeasibility
checks run between fixed-size chunks of backend iterations.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.linalg import cholesky_banded

from .. import _kernels as K
from ..errors import ConfigError, QpSolveError

_CHUNK = 25
_RHO_EQ_SCALE = 1e3


@dataclass(frozen=True)
class QpProblem:
    P: sp.csc_matrix
    q: np.ndarray
    A: sp.csc_matrix
    l: np.ndarray
    u: np.ndarray
    layout: dict = field(default_factory=dict)
    validate: bool = True

    def __post_init__(self) -> None:
        P = sp.csc_matrix(self.P)
        A = sp.csc_matrix(self.A)
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "q", np.asarray(self.q, dtype=float).ravel())
        object.__setattr__(self, "l", np.asarray(self.l, dtype=float).ravel())
        object.__setattr__(self, "u", np.asarray(self.u, dtype=float).ravel())
        n, m = P.shape[0], A.shape[0]
        if P.shape != (n, n) or self.q.shape != (n,) or A.shape[1] != n:
            raise ConfigError("inconsistent QP dimensions")
        if self.l.shape != (m,) or self.u.shape != (m,):
            raise ConfigError("bound vectors must match constraint rows")
        if np.any(self.l > self.u):
            raise ConfigError("need l <= u rowwise")
        if self.validate:
            asym = abs(P - P.T)
            if asym.nnz and asym.max() > 1e-10:
                raise ConfigError("cost matrix must be symmetric within 1e-10")
            if n <= 128:  # exact PSD check only at oracle-suite sizes
                w = np.linalg.eigvalsh(P.toarray())
                if w[0] < -1e-10 * max(1.0, abs(w[-1])):
                    raise ConfigError("cost matrix must be PSD within 1e-10")

    @property
    def n(self) -> int:
        return self.P.shape[0]

    @property
    def m(self) -> int:
        return self.A.shape[0]


@dataclass
class QpSolution:
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    status: str  # optimal | max_iters | infeasible
    iterations: int
    residuals: dict


def kkt_residuals(problem: QpProblem, x: np.ndarray, y: np.ndarray) -> dict:
    """Absolute KKT residuals: stationarity, primal feasibility, complementarity."""
    Ax = problem.A @ x
    stat = float(np.max(np.abs(problem.P @ x + problem.q + problem.A.T @ y))) if problem.n else 0.0
    viol = np.maximum(problem.l - Ax, 0.0) + np.maximum(Ax - problem.u, 0.0)
    prim = float(viol.max()) if problem.m else 0.0
    # y > 0 pairs with the upper bound, y < 0 with the lower; a multiplier
    # pushing against an infinite bound counts fully as violation
    comp = 0.0
    up, dn = y > 0, y < 0
    u_fin, l_fin = np.isfinite(problem.u), np.isfinite(problem.l)
    if np.any(up):
        comp = max(comp, float(np.max(np.where(u_fin[up], y[up] * np.abs(problem.u - Ax)[up], y[up]))))
    if np.any(dn):
        comp = max(comp, float(np.max(np.where(l_fin[dn], -y[dn] * np.abs(Ax - problem.l)[dn], -y[dn]))))
    return {"stationarity": stat, "primal": prim, "complementarity": comp}


def _ruiz_equilibrate(P, q, A, l, u, iters=10):
    """Symmetric diagonal scaling of the stacked problem data.

    Returns scaled copies plus the scalings (d, e, c) with x = d * x_bar,
    y = e * y_bar / c. Keeps the per-iteration factors inside [1e-4, 1e4]
    so degenerate rows cannot blow up the conditioning. The loop tracks the
    cumulative factors over the raw coordinate arrays; the scaled matrices
    are materialized once at the end.
    """
    n, m = P.shape[0], A.shape[0]
    Pc, Ac = P.tocoo(), A.tocoo()
    p_abs, a_abs = np.abs(Pc.data), np.abs(Ac.data)
    d, e, c = np.ones(n), np.ones(m), 1.0
    norm_x, norm_y = np.empty(n), np.empty(m)
    for _ in range(iters):
        p_now = p_abs * (c * d[Pc.row] * d[Pc.col])
        a_now = a_abs * (e[Ac.row] * d[Ac.col])
        norm_x[:] = 0.0
        np.maximum.at(norm_x, Pc.col, p_now)
        np.maximum.at(norm_x, Ac.col, a_now)
        delta_x = np.where(norm_x > 0, 1.0 / np.sqrt(np.clip(norm_x, 1e-8, 1e8)), 1.0)
        delta_x = np.clip(delta_x, 1e-4, 1e4)
        if m:
            norm_y[:] = 0.0
            np.maximum.at(norm_y, Ac.row, a_now)
            delta_y = np.where(norm_y > 0, 1.0 / np.sqrt(np.clip(norm_y, 1e-8, 1e8)), 1.0)
            delta_y = np.clip(delta_y, 1e-4, 1e4)
            e *= delta_y
        d *= delta_x
        # normalize the cost magnitude
        norm_x[:] = 0.0
        np.maximum.at(norm_x, Pc.col, p_abs * (c * d[Pc.row] * d[Pc.col]))
        q_norm = float(np.max(np.abs(q * d * c))) if n else 0.0
        denom = max(float(norm_x.mean()) if n else 0.0, q_norm)
        c *= np.clip(1.0 / denom, 1e-4, 1e4) if denom > 0 else 1.0
    Pb = sp.coo_matrix((Pc.data * (c * d[Pc.row] * d[Pc.col]), (Pc.row, Pc.col)), shape=P.shape).tocsc()
    Ab = sp.coo_matrix((Ac.data * (e[Ac.row] * d[Ac.col]), (Ac.row, Ac.col)), shape=A.shape).tocsc()
    return Pb, q * d * c, Ab, e * l, e * u, d, e, c


def _banded_factor(Kmat: sp.csc_matrix) -> np.ndarray:
    coo = Kmat.tocoo()
    mask = coo.row <= coo.col
    r, c, v = coo.row[mask], coo.col[mask], coo.data[mask]
    bw = int((c - r).max()) if len(r) else 0
    n = Kmat.shape[0]
    ab = np.zeros((bw + 1, n))
    ab[bw + r - c, c] = v
    try:
        return np.ascontiguousarray(cholesky_banded(ab, lower=False))
    except np.linalg.LinAlgError as exc:
        raise QpSolveError(f"KKT system not positive definite: {exc}") from None


def solve_qp_full(
    problem: QpProblem,
    tolerance: float = 1e-6,
    max_iters: int = 20000,
    rho: float = 0.1,
    sigma: float = 1e-6,
    alpha: float = 1.6,
    warm_x: np.ndarray | None = None,
    warm_y: np.ndarray | None = None,
    scaling_iters: int = 10,
) -> QpSolution:
    n, m = problem.n, problem.m
    if scaling_iters > 0:
        Ps, qs, As, ls, us, d, e, c = _ruiz_equilibrate(
            problem.P, problem.q, problem.A, problem.l, problem.u, scaling_iters
        )
    else:
        Ps, qs, As, ls, us = problem.P, problem.q, problem.A, problem.l, problem.u
        d, e, c = np.ones(n), np.ones(m), 1.0
    inv_cd = 1.0 / (c * d)
    inv_e = 1.0 / e

    A = As.tocsr()
    At = As.T.tocsr()
    eq = np.isfinite(ls) & np.isfinite(us) & (ls == us)

    # warm values arrive in problem units; the iteration runs in scaled units
    x = np.zeros(n) if warm_x is None else np.asarray(warm_x, dtype=float) / d
    y = np.zeros(m) if warm_y is None else c * np.asarray(warm_y, dtype=float) / e
    z = np.clip(A @ x, ls, us)

    indptr = A.indptr.astype(np.int32)
    indices = A.indices.astype(np.int32)

    rho_base = rho
    refactors = 0
    last_refactor = 0
    it = 0
    status = "max_iters"
    res = {}
    while True:
        rho_vec = np.where(eq, rho_base * _RHO_EQ_SCALE, rho_base)
        Kmat = (Ps + sigma * sp.eye(n, format="csc") + (At.multiply(rho_vec) @ A)).tocsc()
        Kmat.sum_duplicates()
        factor = _banded_factor(Kmat)

        rescale = False
        while it < max_iters:
            step = min(_CHUNK, max_iters - it)
            y_prev = y.copy()
            K.admm_chunk(
                indptr, indices, A.data, n, factor, rho_vec, sigma, alpha,
                qs, ls, us, x, z, y, step,
            )
            it += step

            # residuals in problem units, not scaled units
            Ax = A @ x
            Px = Ps @ x
            Aty = At @ y
            r_prim = float(np.max(np.abs((Ax - z) * inv_e))) if m else 0.0
            r_dual = float(np.max(np.abs((Px + qs + Aty) * inv_cd)))
            res = {"primal": r_prim, "dual": r_dual}
            if r_prim <= tolerance and r_dual <= tolerance:
                status = "optimal"
                break

            dy = (y - y_prev) * e / c  # certificate checked against original data
            dy_norm = float(np.max(np.abs(dy))) if m else 0.0
            if dy_norm > 0:
                sup_ok = np.all((dy <= 0) | np.isfinite(problem.u)) and np.all((dy >= 0) | np.isfinite(problem.l))
                if sup_ok:
                    u_fin, l_fin = np.isfinite(problem.u), np.isfinite(problem.l)
                    gap = float(
                        problem.u[u_fin] @ np.maximum(dy[u_fin], 0.0)
                        + problem.l[l_fin] @ np.minimum(dy[l_fin], 0.0)
                    )
                    if float(np.max(np.abs(problem.A.T @ dy))) <= 1e-10 * dy_norm and gap < -1e-10 * dy_norm:
                        status = "infeasible"
                        break

            # rebalance rho when the residuals drift apart. Two triggers: the
            # relative ratio normalizes each residual by the magnitude of its
            # own terms so a badly scaled row cannot mask a stalled side, and
            # the absolute ratio catches the converse case where large cost
            # coefficients deflate the relative dual residual while the
            # absolute one decays too slowly to ever reach the tolerance. The
            # wide trigger bands plus the iteration spacing prevent refactor
            # oscillation, which otherwise restarts the splitting transient
            # forever.
            if m and refactors < 20 and it - last_refactor >= 2000:
                pmag = max(float(np.max(np.abs(Ax))), float(np.max(np.abs(z))), 1e-12)
                dmag = max(
                    float(np.max(np.abs(Px))), float(np.max(np.abs(Aty))), float(np.max(np.abs(qs))), 1e-12
                )
                rel_p = float(np.max(np.abs(Ax - z))) / pmag
                rel_d = max(float(np.max(np.abs(Px + qs + Aty))) / dmag, 1e-16)
                scale_rel = float(np.sqrt(rel_p / rel_d))
                ratio_abs = r_prim / max(r_dual, 1e-16)
                scale = 0.0
                if scale_rel > 10.0 or scale_rel < 0.1:
                    scale = scale_rel
                elif ratio_abs > 1e3 or ratio_abs < 1e-3:
                    scale = float(np.clip(np.sqrt(ratio_abs), 0.05, 20.0))
                if scale > 0.0:
                    rho_base = float(np.clip(rho_base * scale, 1e-6, 1e6))
                    refactors += 1
                    last_refactor = it
                    rescale = True
                    break
        if not rescale:
            break

    return QpSolution(x=d * x, y=e * y / c, z=z * inv_e, status=status, iterations=it, residuals=res)


def solve_qp(problem: QpProblem, tolerance: float = 1e-6, max_iters: int = 20000) -> tuple[np.ndarray, str]:
    """Solve the QP; returns the primal solution and a status string."""
    sol = solve_qp_full(problem, tolerance=tolerance, max_iters=max_iters)
    return sol.x, sol.status
