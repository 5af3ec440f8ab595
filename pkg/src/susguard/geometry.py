"""Explicit geometry of the calibrated region.

A euclidean (or squared-euclidean) calibration yields a union of balls
around the error states; an unsafe-safe squared-euclidean calibration yields
a union of polytopes, one per error state, with one halfspace per safe
state: a_ij = y_j - x_i, b_ij = (r + ||y_j||^2 - ||x_i||^2) / 2.

Region membership is mathematically identical to the score-threshold test;
the polytope route exercises entirely different arithmetic, which is what
makes the equivalence tests meaningful.
"""

from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, HalfspaceIntersection

from . import _kernels as K
from . import jsonfmt
from .conformal import CalibrationResult, calibrate, export_calibration
from .conformal.dissimilarity import Dissimilarity
from .errors import (
    ConfigError,
    DegenerateHalfspaceError,
    DimensionMismatchError,
    UnsupportedDissimilarityError,
)


@dataclass(frozen=True)
class Polytope:
    """Halfspace intersection {x : A x <= b} with the error state it wraps."""

    A: np.ndarray  # (M, d)
    b: np.ndarray  # (M,)
    center_hint: np.ndarray  # (d,)

    def __post_init__(self) -> None:
        object.__setattr__(self, "A", np.atleast_2d(np.asarray(self.A, dtype=float)))
        object.__setattr__(self, "b", np.asarray(self.b, dtype=float).ravel())
        object.__setattr__(self, "center_hint", np.asarray(self.center_hint, dtype=float).ravel())
        if self.A.shape[0] != self.b.shape[0]:
            raise ConfigError("A and b row counts differ")

    @property
    def n_faces(self) -> int:
        return self.A.shape[0]

    @property
    def dim(self) -> int:
        return self.A.shape[1]

    def contains(self, x: np.ndarray) -> bool:
        x = np.asarray(x, dtype=float).ravel()
        if x.shape[0] != self.dim:
            raise DimensionMismatchError(f"point dim {x.shape[0]} != polytope dim {self.dim}")
        return bool(np.all(self.A @ x <= self.b))


@dataclass(frozen=True)
class SusRegion:
    form: str  # "balls" | "polyhedra"
    epsilon: float
    source_calibration_id: str
    centers: np.ndarray | None = None  # balls: (N, d)
    radius: float | None = None
    polytopes: tuple[Polytope, ...] = ()
    extra: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        if self.form == "balls":
            return self.centers.shape[1]
        return self.polytopes[0].dim

    @property
    def n_components(self) -> int:
        if self.form == "balls":
            return len(self.centers)
        return len(self.polytopes)


def calibration_id(calibration: CalibrationResult) -> str:
    doc = json.dumps(export_calibration(calibration), sort_keys=True)
    return hashlib.sha256(doc.encode()).hexdigest()[:16]


def build_region(calibration: CalibrationResult) -> SusRegion:
    """Closed geometric form of the calibrated sublevel set.

    euclidean -> balls of radius r; squared_euclidean -> balls of radius
    sqrt(r) (rejected for negative r, which nonnegative measures cannot
    produce); unsafe_safe_squared -> one polytope per error state.
    """
    diss = calibration.dissimilarity
    r = calibration.threshold_r
    cal_id = calibration_id(calibration)
    if diss.kind == "euclidean":
        return SusRegion(
            form="balls",
            epsilon=calibration.epsilon,
            source_calibration_id=cal_id,
            centers=calibration.error_states.copy(),
            radius=float(r),
        )
    if diss.kind == "squared_euclidean":
        if r < 0:
            raise UnsupportedDissimilarityError("negative squared-euclidean threshold has no ball form")
        return SusRegion(
            form="balls",
            epsilon=calibration.epsilon,
            source_calibration_id=cal_id,
            centers=calibration.error_states.copy(),
            radius=float(np.sqrt(r)),
        )
    if diss.kind == "unsafe_safe_squared":
        safe = diss.safe_states
        if safe is None or len(safe) == 0:
            raise UnsupportedDissimilarityError("polyhedral form needs a non-empty safe set")
        polys = []
        sq_safe = (safe * safe).sum(axis=1)
        for xi in calibration.error_states:
            A = safe - xi[None, :]
            b = (r + sq_safe - float(xi @ xi)) / 2.0
            norms = np.sqrt((A * A).sum(axis=1))
            keep = norms > 0.0
            if not keep.all():
                warnings.warn(
                    "dropping zero-normal halfspace(s): an error state coincides with a safe state",
                    RuntimeWarning,
                    stacklevel=2,
                )
                A, b = A[keep], b[keep]
            polys.append(Polytope(A=A, b=b, center_hint=xi))
        return SusRegion(
            form="polyhedra",
            epsilon=calibration.epsilon,
            source_calibration_id=cal_id,
            polytopes=tuple(polys),
        )
    raise UnsupportedDissimilarityError(f"no closed geometric form for kind {diss.kind!r}")


def region_contains(region: SusRegion, x: np.ndarray) -> bool:
    return bool(region_contains_batch(region, np.atleast_2d(np.asarray(x, dtype=float)))[0])


def region_contains_batch(region: SusRegion, xs: np.ndarray) -> np.ndarray:
    xs = np.atleast_2d(np.ascontiguousarray(xs, dtype=float))
    if xs.shape[1] != region.dim:
        raise DimensionMismatchError(f"point dim {xs.shape[1]} != region dim {region.dim}")
    if region.form == "balls":
        return np.sqrt(K.min_sqdist(region.centers, xs)) <= region.radius
    inside = np.zeros(len(xs), dtype=bool)
    for poly in region.polytopes:
        pending = ~inside
        if not pending.any():
            break
        sat = (xs[pending] @ poly.A.T <= poly.b[None, :]).all(axis=1)
        inside[np.flatnonzero(pending)[sat]] = True
    return inside


def select_separating_halfspace(polytope: Polytope, reference_point: np.ndarray) -> tuple[np.ndarray, float]:
    """Face with the largest signed distance to the reference point.

    The caller imposes a . x > b to keep the optimizer out of this polytope.
    For a reference outside, that face is currently satisfied; for one
    inside, it is the constraint closest to holding. Exact ties break to the
    lowest face index.
    """
    x = np.asarray(reference_point, dtype=float).ravel()
    if x.shape[0] != polytope.dim:
        raise DimensionMismatchError(f"point dim {x.shape[0]} != polytope dim {polytope.dim}")
    norms = np.sqrt((polytope.A * polytope.A).sum(axis=1))
    if np.any(norms == 0.0):
        raise DegenerateHalfspaceError("polytope has zero-normal face(s)")
    d = (polytope.A @ x - polytope.b) / norms
    j = int(np.argmax(d))  # argmax returns the first (lowest) index on ties
    return polytope.A[j].copy(), float(polytope.b[j])


def _drop_duplicate_faces(A: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    seen: set[bytes] = set()
    keep = []
    for i in range(len(b)):
        key = np.ascontiguousarray(np.concatenate([A[i], [b[i]]])).tobytes()
        if key not in seen:
            seen.add(key)
            keep.append(i)
    return A[keep], b[keep]


def _lp_redundant(A: np.ndarray, b: np.ndarray, i: int) -> bool:
    """Face i is redundant iff max a_i.x over the other faces stays <= b_i.

    The objective is capped at b_i + 1 to keep the LP bounded; the test is
    unaffected because only the sign of (max - b_i) matters.
    """
    others = np.delete(np.arange(len(b)), i)
    A_ub = np.vstack([A[others], A[i][None, :]])
    b_ub = np.concatenate([b[others], [b[i] + 1.0]])
    res = linprog(-A[i], A_ub=A_ub, b_ub=b_ub, bounds=[(None, None)] * A.shape[1], method="highs")
    if not res.success:
        return False
    return -res.fun <= b[i] + 1e-9


def prune_halfspaces(polytope: Polytope, max_faces: int, method: str = "lp", rng_seed: int = 0) -> Polytope:
    """Reduce face count; the result always CONTAINS the original polytope.

    Dropping inequality rows can only enlarge the feasible set, so every
    path here is conservative. method="lp" removes provably redundant faces
    first; method="sampling" uses the cheaper membership-sampling heuristic.
    If still above max_faces, the loosest faces at the center hint are
    dropped.
    """
    if max_faces < polytope.dim + 1:
        raise ConfigError(f"max_faces must be >= dim+1 = {polytope.dim + 1}")
    if method not in ("lp", "sampling"):
        raise ConfigError(f"unknown pruning method {method!r}")
    A, b = _drop_duplicate_faces(polytope.A, polytope.b)

    if len(b) > max_faces and method == "lp":
        i = 0
        while i < len(b) and len(b) > max_faces:
            if _lp_redundant(A, b, i):
                A, b = np.delete(A, i, axis=0), np.delete(b, i)
            else:
                i += 1
    elif len(b) > max_faces and method == "sampling":
        rng = np.random.default_rng(rng_seed)
        norms = np.sqrt((A * A).sum(axis=1))
        spread = np.abs(b - A @ polytope.center_hint) / norms
        scale = max(float(np.median(spread)) * 2.0, 1e-6)
        pts = polytope.center_hint[None, :] + rng.normal(size=(1000, polytope.dim)) * scale
        i = 0
        while i < len(b) and len(b) > max_faces:
            viol_i = (pts @ A[i]) > b[i]
            others = np.delete(np.arange(len(b)), i)
            sat_rest = (pts @ A[others].T <= b[others][None, :]).all(axis=1)
            if not np.any(viol_i & sat_rest):  # removal changes no sampled membership
                A, b = np.delete(A, i, axis=0), np.delete(b, i)
            else:
                i += 1

    if len(b) > max_faces:
        # keep the tightest faces at the center hint; dropping the rest only
        # enlarges the set
        norms = np.sqrt((A * A).sum(axis=1))
        slack = (b - A @ polytope.center_hint) / norms
        order = np.argsort(slack, kind="stable")[:max_faces]
        order.sort()
        A, b = A[order], b[order]
    return Polytope(A=A, b=b, center_hint=polytope.center_hint)


def approximate_point_cloud(
    points: np.ndarray,
    target_coverage: float,
    subsample_n: int,
    inflate: float,
    rng_seed: int = 0,
) -> SusRegion:
    """Ball-union approximation of a point cloud with a coverage target.

    Subsamples n of the N points and calibrates balls at the inner epsilon
    solving n + (1-eps)(N-n) = target_coverage*N, so the union covers the
    target fraction of the cloud in expectation. Radii grow by `inflate`
    (vehicle volume margin). When target_coverage*N <= n the conformal step
    is skipped and balls of radius `inflate` are placed on a random
    target-fraction subset.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    n_total = len(pts)
    if not 0.0 < target_coverage < 1.0:
        raise ConfigError("target_coverage must be in (0, 1)")
    rng = np.random.default_rng(rng_seed)
    target_count = target_coverage * n_total
    if target_count <= subsample_n:  # nothing left to leave uncovered: skip calibration
        m = int(np.ceil(target_count))
        idx = rng.choice(n_total, size=m, replace=False)
        return SusRegion(
            form="balls",
            epsilon=float("nan"),
            source_calibration_id="pointcloud-fallback",
            centers=pts[idx].copy(),
            radius=float(inflate),
            extra={"fallback": True, "target_coverage": target_coverage},
        )
    idx = rng.choice(n_total, size=subsample_n, replace=False)
    sub = pts[idx]
    inner_eps = 1.0 - (target_count - subsample_n) / (n_total - subsample_n)
    cal = calibrate(sub, inner_eps, Dissimilarity.euclidean())
    return SusRegion(
        form="balls",
        epsilon=float(inner_eps),
        source_calibration_id=calibration_id(cal),
        centers=sub.copy(),
        radius=float(cal.threshold_r + inflate),
        extra={"fallback": False, "target_coverage": target_coverage, "inner_epsilon": inner_eps},
    )


# -- plot/export helpers -------------------------------------------------------


def _chebyshev_center(A: np.ndarray, b: np.ndarray) -> np.ndarray | None:
    """Strictly interior point of {Ax <= b}, or None when empty/degenerate."""
    norms = np.sqrt((A * A).sum(axis=1))
    d = A.shape[1]
    c = np.zeros(d + 1)
    c[-1] = -1.0
    A_ub = np.hstack([A, norms[:, None]])
    res = linprog(c, A_ub=A_ub, b_ub=b, bounds=[(None, None)] * d + [(0, None)], method="highs")
    if not res.success or res.x[-1] <= 1e-12:
        return None
    return res.x[:-1]


def polytope_slice(poly: Polytope, fixed_dims: list[int], fixed_values: np.ndarray) -> Polytope:
    """Restrict a polytope to the affine slice fixing the given coordinates."""
    fixed_dims = list(fixed_dims)
    keep = [j for j in range(poly.dim) if j not in fixed_dims]
    fv = np.asarray(fixed_values, dtype=float).ravel()
    A_keep = poly.A[:, keep]
    b_new = poly.b - poly.A[:, fixed_dims] @ fv
    norms = np.sqrt((A_keep * A_keep).sum(axis=1))
    rows = norms > 1e-14
    if np.any(b_new[~rows] < 0.0):  # a face normal to the slice plane is violated
        return Polytope(A=np.zeros((1, len(keep))), b=np.array([-1.0]), center_hint=poly.center_hint[keep])
    return Polytope(A=A_keep[rows], b=b_new[rows], center_hint=poly.center_hint[keep])


def polytope_vertices(poly: Polytope, bounds: tuple[np.ndarray, np.ndarray] | None = None) -> np.ndarray:
    """Vertices of a (bounded) polytope; empty array when infeasible.

    Bounds (lo, hi per dimension) are intersected first so open polytopes
    become bounded; pass the room/plot extent.
    """
    A, b = poly.A, poly.b
    if bounds is not None:
        lo, hi = np.asarray(bounds[0], dtype=float), np.asarray(bounds[1], dtype=float)
        eye = np.eye(poly.dim)
        A = np.vstack([A, eye, -eye])
        b = np.concatenate([b, hi, -lo])
    interior = _chebyshev_center(A, b)
    if interior is None:
        return np.empty((0, poly.dim))
    hs = HalfspaceIntersection(np.hstack([A, -b[:, None]]), interior)
    verts = hs.intersections
    if poly.dim == 2 and len(verts) >= 3:
        ang = np.arctan2(verts[:, 1] - interior[1], verts[:, 0] - interior[0])
        verts = verts[np.argsort(ang, kind="stable")]
    return verts


def polytope_slice_mesh(
    poly: Polytope,
    fixed_dims: list[int],
    fixed_values: np.ndarray,
    bounds: tuple[np.ndarray, np.ndarray],
) -> dict | None:
    """3-D slice of a higher-dimensional polytope as a triangle mesh.

    Returns {vertices, faces} with hull triangles, or None when the slice is
    empty. Used by the region export consumed by the labeling console.
    """
    sl = polytope_slice(poly, fixed_dims, fixed_values)
    verts = polytope_vertices(sl, bounds=bounds)
    if len(verts) < sl.dim + 1:
        return None
    try:
        hull = ConvexHull(verts)
    except Exception:
        return None
    return {"vertices": verts, "faces": hull.simplices.tolist()}


def region_to_json(region: SusRegion) -> dict:
    doc: dict = {
        "form": region.form,
        "epsilon": jsonfmt.format_float(region.epsilon) if np.isfinite(region.epsilon) else None,
        "source_calibration_id": region.source_calibration_id,
    }
    if region.form == "balls":
        doc["centers"] = jsonfmt.float_matrix(region.centers)
        doc["radius"] = jsonfmt.format_float(region.radius)
    else:
        doc["polytopes"] = [
            {
                "A": jsonfmt.float_matrix(p.A),
                "b": jsonfmt.float_vector(p.b),
                "center_hint": jsonfmt.float_vector(p.center_hint),
            }
            for p in region.polytopes
        ]
    return doc


def region_from_json(doc: dict) -> SusRegion:
    eps = float("nan") if doc.get("epsilon") is None else jsonfmt.parse_float(doc["epsilon"])
    if doc["form"] == "balls":
        return SusRegion(
            form="balls",
            epsilon=eps,
            source_calibration_id=doc["source_calibration_id"],
            centers=jsonfmt.parse_matrix(doc["centers"]),
            radius=jsonfmt.parse_float(doc["radius"]),
        )
    polys = tuple(
        Polytope(
            A=jsonfmt.parse_matrix(p["A"]),
            b=jsonfmt.parse_vector(p["b"]),
            center_hint=jsonfmt.parse_vector(p["center_hint"]),
        )
        for p in doc["polytopes"]
    )
    return SusRegion(form="polyhedra", epsilon=eps, source_calibration_id=doc["source_calibration_id"], polytopes=polys)
