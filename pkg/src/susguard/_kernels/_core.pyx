# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernel backend.

Hot loops only: brute-force NN squared distances and the ADMM inner
iteration. Distance accumulation runs dimension by dimension in index order,
matching the NumPy fallback bit for bit (the build disables FP contraction).
"""

import numpy as np

from libc.math cimport INFINITY

NAME = "compiled"


def pair_sqdist(a, b):
    cdef double[:, ::1] av = np.ascontiguousarray(a, dtype=np.float64)
    cdef double[:, ::1] bv = np.ascontiguousarray(b, dtype=np.float64)
    cdef Py_ssize_t m = av.shape[0], d = av.shape[1], i, k
    cdef double acc, diff
    out_arr = np.empty(m)
    cdef double[::1] out = out_arr
    for i in range(m):
        acc = 0.0
        for k in range(d):
            diff = av[i, k] - bv[i, k]
            acc = acc + diff * diff
        out[i] = acc
    return out_arr


def min_sqdist(ref, queries):
    cdef double[:, ::1] rv = np.ascontiguousarray(ref, dtype=np.float64)
    cdef double[:, ::1] qv = np.ascontiguousarray(queries, dtype=np.float64)
    cdef Py_ssize_t n = rv.shape[0], d = rv.shape[1], m = qv.shape[0], i, j, k
    cdef double acc, diff, best
    out_arr = np.empty(m)
    cdef double[::1] out = out_arr
    for j in range(m):
        best = INFINITY
        for i in range(n):
            acc = 0.0
            for k in range(d):
                diff = qv[j, k] - rv[i, k]
                acc = acc + diff * diff
            if acc < best:
                best = acc
        out[j] = best
    return out_arr


def argmin_sqdist(ref, queries):
    cdef double[:, ::1] rv = np.ascontiguousarray(ref, dtype=np.float64)
    cdef double[:, ::1] qv = np.ascontiguousarray(queries, dtype=np.float64)
    cdef Py_ssize_t n = rv.shape[0], d = rv.shape[1], m = qv.shape[0], i, j, k, bi
    cdef double acc, diff, best
    idx_arr = np.empty(m, dtype=np.int64)
    val_arr = np.empty(m)
    cdef long long[::1] idx = idx_arr
    cdef double[::1] val = val_arr
    for j in range(m):
        best = INFINITY
        bi = 0
        for i in range(n):
            acc = 0.0
            for k in range(d):
                diff = qv[j, k] - rv[i, k]
                acc = acc + diff * diff
            if acc < best:
                best = acc
                bi = i
        idx[j] = bi
        val[j] = best
    return idx_arr, val_arr


def loo_min_sqdist(points):
    cdef double[:, ::1] pv = np.ascontiguousarray(points, dtype=np.float64)
    cdef Py_ssize_t n = pv.shape[0], d = pv.shape[1], i, j, k
    cdef double acc, diff, best
    out_arr = np.empty(n)
    cdef double[::1] out = out_arr
    for i in range(n):
        best = INFINITY
        for j in range(n):
            if j == i:
                continue
            acc = 0.0
            for k in range(d):
                diff = pv[i, k] - pv[j, k]
                acc = acc + diff * diff
            if acc < best:
                best = acc
        out[i] = best
    return out_arr


cdef void _banded_solve(double[:, ::1] cb, double[::1] b, double[::1] out) noexcept:
    """Solve U'U x = b with U in LAPACK upper-banded storage (cb[ku+i-j, j])."""
    cdef Py_ssize_t n = cb.shape[1], ku = cb.shape[0] - 1, i, j, i0, jmax
    cdef double acc
    for j in range(n):
        acc = b[j]
        i0 = j - ku if j >= ku else 0
        for i in range(i0, j):
            acc -= cb[ku + i - j, j] * out[i]
        out[j] = acc / cb[ku, j]
    for i in range(n - 1, -1, -1):
        acc = out[i]
        jmax = i + ku if i + ku < n - 1 else n - 1
        for j in range(i + 1, jmax + 1):
            acc -= cb[ku + i - j, j] * out[j]
        out[i] = acc / cb[ku, i]


def admm_chunk(A_indptr, A_indices, A_data, n, factor, rho, sigma, alpha, q, l, u, x, z, y, n_iters):
    """Run n_iters ADMM iterations in place on (x, z, y). Mirrors the fallback."""
    cdef int[::1] indptr = A_indptr
    cdef int[::1] indices = A_indices
    cdef double[::1] data = A_data
    cdef double[:, ::1] cb = factor
    cdef double[::1] rhov = rho
    cdef double[::1] qv = q
    cdef double[::1] lv = l
    cdef double[::1] uv = u
    cdef double[::1] xv = x
    cdef double[::1] zv = z
    cdef double[::1] yv = y
    cdef double sig = sigma, alp = alpha
    cdef Py_ssize_t nn = n, m = indptr.shape[0] - 1, it, i, j, p
    cdef int iters = n_iters
    cdef double acc, v, zri, znew

    rhs_arr = np.empty(nn)
    xt_arr = np.empty(nn)
    zt_arr = np.empty(m)
    cdef double[::1] rhs = rhs_arr
    cdef double[::1] xt = xt_arr
    cdef double[::1] zt = zt_arr

    for it in range(iters):
        # rhs = sigma*x - q + A'(rho*z - y)
        for j in range(nn):
            rhs[j] = sig * xv[j] - qv[j]
        for i in range(m):
            v = rhov[i] * zv[i] - yv[i]
            for p in range(indptr[i], indptr[i + 1]):
                rhs[indices[p]] += data[p] * v
        _banded_solve(cb, rhs, xt)
        # zt = A xt; x = alpha*xt + (1-alpha)*x
        for i in range(m):
            acc = 0.0
            for p in range(indptr[i], indptr[i + 1]):
                acc += data[p] * xt[indices[p]]
            zt[i] = acc
        for j in range(nn):
            xv[j] = alp * xt[j] + (1.0 - alp) * xv[j]
        for i in range(m):
            zri = alp * zt[i] + (1.0 - alp) * zv[i]
            znew = zri + yv[i] / rhov[i]
            if znew < lv[i]:
                znew = lv[i]
            elif znew > uv[i]:
                znew = uv[i]
            zv[i] = znew
            yv[i] = yv[i] + rhov[i] * (zri - znew)
