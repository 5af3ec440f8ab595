"""Pure-NumPy kernel backend.

Mirrors the compiled backend exactly. Squared distances accumulate dimension
by dimension in index order, so results are bit-identical to the compiled
per-pair loops (no FMA contraction, no pairwise-sum reordering).
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import cho_solve_banded

NAME = "numpy"

# queries per chunk are sized so the (chunk, n_ref) scratch stays ~32 MB
_CHUNK_BUDGET = 4_000_000


def _as2d(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError("expected a 2-D array")
    return a


def pair_sqdist(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Squared Euclidean distance between matched rows of a and b."""
    a = _as2d(a)
    b = _as2d(b)
    acc = np.zeros(a.shape[0])
    for k in range(a.shape[1]):
        diff = a[:, k] - b[:, k]
        acc += diff * diff
    return acc


def min_sqdist(ref: np.ndarray, queries: np.ndarray) -> np.ndarray:
    """Per-query minimum squared Euclidean distance to any reference row."""
    ref = _as2d(ref)
    queries = _as2d(queries)
    n, d = ref.shape
    m = queries.shape[0]
    out = np.empty(m)
    chunk = max(1, _CHUNK_BUDGET // max(n, 1))
    for s in range(0, m, chunk):
        q = queries[s : s + chunk]
        acc = np.zeros((q.shape[0], n))
        for k in range(d):
            diff = q[:, k, None] - ref[None, :, k]
            acc += diff * diff
        out[s : s + chunk] = acc.min(axis=1)
    return out


def argmin_sqdist(ref: np.ndarray, queries: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Index of the nearest reference row per query, plus the squared distance."""
    ref = _as2d(ref)
    queries = _as2d(queries)
    n, d = ref.shape
    m = queries.shape[0]
    idx = np.empty(m, dtype=np.int64)
    val = np.empty(m)
    chunk = max(1, _CHUNK_BUDGET // max(n, 1))
    for s in range(0, m, chunk):
        q = queries[s : s + chunk]
        acc = np.zeros((q.shape[0], n))
        for k in range(d):
            diff = q[:, k, None] - ref[None, :, k]
            acc += diff * diff
        ii = acc.argmin(axis=1)
        idx[s : s + chunk] = ii
        val[s : s + chunk] = acc[np.arange(q.shape[0]), ii]
    return idx, val


def loo_min_sqdist(points: np.ndarray) -> np.ndarray:
    """Leave-one-out min squared distance inside one point set."""
    pts = _as2d(points)
    n, d = pts.shape
    acc = np.zeros((n, n))
    for k in range(d):
        diff = pts[:, k, None] - pts[None, :, k]
        acc += diff * diff
    np.fill_diagonal(acc, np.inf)
    return acc.min(axis=1)


def admm_chunk(
    A_indptr: np.ndarray,
    A_indices: np.ndarray,
    A_data: np.ndarray,
    n: int,
    factor: np.ndarray,
    rho: np.ndarray,
    sigma: float,
    alpha: float,
    q: np.ndarray,
    l: np.ndarray,
    u: np.ndarray,
    x: np.ndarray,
    z: np.ndarray,
    y: np.ndarray,
    n_iters: int,
) -> None:
    """Run n_iters ADMM iterations in place on (x, z, y).

    The caller owns the banded Cholesky factor of P + sigma*I + A' diag(rho) A
    (upper banded storage) and all convergence logic.
    """
    from scipy.sparse import csr_matrix

    m = len(A_indptr) - 1
    A = csr_matrix((A_data, A_indices, A_indptr), shape=(m, n))
    At = A.T.tocsc()
    for _ in range(n_iters):
        rhs = sigma * x - q + At @ (rho * z - y)
        xt = cho_solve_banded((factor, False), rhs)
        zt = A @ xt
        x[:] = alpha * xt + (1.0 - alpha) * x
        zr = alpha * zt + (1.0 - alpha) * z
        z[:] = np.clip(zr + y / rho, l, u)
        y += rho * (zr - z)
