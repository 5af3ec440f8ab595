"""Nearest-neighbor scoring engine.

Euclidean-geometry kinds use a k-d tree above _TREE_THRESHOLD reference
points and brute force below. The tree only locates the argmin; the returned
distance is always recomputed with the canonical kernel, so both paths agree
bit for bit.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

from .. import _kernels as K
from ..errors import DimensionMismatchError
from .dissimilarity import Dissimilarity

_TREE_THRESHOLD = 200


def _check_dims(ref: np.ndarray, q: np.ndarray) -> None:
    if ref.shape[1] != q.shape[1]:
        raise DimensionMismatchError(f"point dim {q.shape[1]} != data dim {ref.shape[1]}")


def _min_sq(ref: np.ndarray, queries: np.ndarray) -> np.ndarray:
    """Min squared distance per query; tree above threshold, brute below."""
    ref = np.ascontiguousarray(ref, dtype=float)
    queries = np.ascontiguousarray(queries, dtype=float)
    _check_dims(ref, queries)
    if len(ref) > _TREE_THRESHOLD:
        idx = cKDTree(ref).query(queries)[1]
        return K.pair_sqdist(ref[idx], queries)
    return K.min_sqdist(ref, queries)


def _loo_min_sq(points: np.ndarray) -> np.ndarray:
    """Leave-one-out min squared distance inside one set."""
    pts = np.ascontiguousarray(points, dtype=float)
    n = len(pts)
    if n > _TREE_THRESHOLD:
        # self is among the two nearest (possibly tied with a duplicate)
        _, idx = cKDTree(pts).query(pts, k=2)
        other = np.where(idx[:, 0] == np.arange(n), idx[:, 1], idx[:, 0])
        return K.pair_sqdist(pts[other], pts)
    return K.loo_min_sqdist(pts)


def batch_score(diss: Dissimilarity, data: np.ndarray, queries: np.ndarray) -> np.ndarray:
    """s(D; x) = min_{x' in D} d(x', x) for each query x."""
    queries = np.atleast_2d(np.asarray(queries, dtype=float))
    ld = diss.to_latent(np.atleast_2d(np.asarray(data, dtype=float)))
    lq = diss.to_latent(queries)
    kind = diss.effective_kind
    if kind == "euclidean":
        return np.sqrt(_min_sq(ld, lq))
    if kind == "squared_euclidean":
        return _min_sq(ld, lq)
    if kind == "unsafe_safe_squared":
        return _min_sq(ld, lq) - _min_sq(diss.latent_safe, lq)
    if kind == "neg_safe_distance":
        return -np.sqrt(_min_sq(diss.latent_safe, lq))
    raise AssertionError(kind)


def loo_alphas(diss: Dissimilarity, data: np.ndarray) -> np.ndarray:
    """alpha_i = min over data \\ {x_i} of d(x', x_i), per calibration point."""
    ld = diss.to_latent(np.atleast_2d(np.asarray(data, dtype=float)))
    kind = diss.effective_kind
    if kind == "euclidean":
        return np.sqrt(_loo_min_sq(ld))
    if kind == "squared_euclidean":
        return _loo_min_sq(ld)
    if kind == "unsafe_safe_squared":
        return _loo_min_sq(ld) - _min_sq(diss.latent_safe, ld)
    if kind == "neg_safe_distance":
        # d ignores x', so the leave-one-out min equals the score itself
        return -np.sqrt(_min_sq(diss.latent_safe, ld))
    raise AssertionError(kind)


def pair_diss(diss: Dissimilarity, a: np.ndarray, b: np.ndarray) -> float:
    """d(a, b) for a single ordered pair (b is the query side)."""
    la = diss.to_latent(np.atleast_2d(np.asarray(a, dtype=float)))
    lb = diss.to_latent(np.atleast_2d(np.asarray(b, dtype=float)))
    _check_dims(la, lb)
    kind = diss.effective_kind
    if kind == "euclidean":
        return float(np.sqrt(K.pair_sqdist(la, lb)[0]))
    if kind == "squared_euclidean":
        return float(K.pair_sqdist(la, lb)[0])
    if kind == "unsafe_safe_squared":
        return float(K.pair_sqdist(la, lb)[0] - _min_sq(diss.latent_safe, lb)[0])
    if kind == "neg_safe_distance":
        return float(-np.sqrt(_min_sq(diss.latent_safe, lb)[0]))
    raise AssertionError(kind)
