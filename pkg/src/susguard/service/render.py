"""Position-space render geometry for region viewing.

The console draws regions in position coordinates only. Balls project to
spheres at the error positions with the calibrated radius. Each polytope
is sliced by fixing its non-position coordinates to the component's error
state, leaving a low-dimensional polytope whose vertices are enumerated
here server-side; the console renders vertices and faces verbatim and does
no geometry of its own. All floats in the returned document are decimal
strings.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, HalfspaceIntersection, QhullError

from .. import jsonfmt

# slices flatter than this margin render as empty rather than as slivers
_MIN_INRADIUS = 1e-9


def _position_bounds(calibration, region) -> tuple[np.ndarray, np.ndarray]:
    """Axis-aligned frame around the data, generous enough to clip slices."""
    pts = [np.atleast_2d(calibration.error_states)]
    if calibration.dissimilarity.safe_states is not None:
        pts.append(np.atleast_2d(calibration.dissimilarity.safe_states))
    stacked = np.vstack(pts)[:, : min(3, pts[0].shape[1])]
    lo, hi = stacked.min(axis=0), stacked.max(axis=0)
    pad = 0.25 * np.maximum(hi - lo, 1.0) + 1.0
    if region.form == "balls":
        pad = pad + region.radius
    return lo - pad, hi + pad


def _slice_halfspaces(A, b, hint, d_pos, lo, hi):
    """Fix trailing coordinates to the hint; clip with the frame box."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    hint = np.asarray(hint, dtype=float)
    bp = b - A[:, d_pos:] @ hint[d_pos:]
    Ap = A[:, :d_pos]
    norms = np.linalg.norm(Ap, axis=1)
    degenerate = norms <= 1e-12
    if np.any(bp[degenerate] < -1e-9):
        return None, None  # a fixed-coordinate constraint is violated outright
    Ap, bp = Ap[~degenerate], bp[~degenerate]
    box_A = np.vstack([np.eye(d_pos), -np.eye(d_pos)])
    box_b = np.concatenate([hi, -lo])
    return np.vstack([Ap, box_A]), np.concatenate([bp, box_b])


def _chebyshev_center(Ap, bp):
    """Largest-inscribed-ball center, or None when the slice is empty/flat."""
    m, d = Ap.shape
    norms = np.linalg.norm(Ap, axis=1)
    c = np.zeros(d + 1)
    c[-1] = -1.0
    res = linprog(
        c,
        A_ub=np.hstack([Ap, norms[:, None]]),
        b_ub=bp,
        bounds=[(None, None)] * d + [(0.0, None)],
        method="highs",
    )
    if not res.success or res.x[-1] <= _MIN_INRADIUS:
        return None
    return res.x[:d]


def _enumerate_vertices(Ap, bp, interior):
    hs = HalfspaceIntersection(np.hstack([Ap, -bp[:, None]]), interior)
    pts = hs.intersections
    try:
        hull = ConvexHull(pts)
    except QhullError:
        hull = ConvexHull(pts, qhull_options="QJ")
    order = {v: i for i, v in enumerate(hull.vertices)}
    verts = hull.points[hull.vertices]
    if Ap.shape[1] == 2:
        # ConvexHull lists 2-D hull vertices in counterclockwise order
        faces = [list(range(len(verts)))]
    else:
        faces = [[order[v] for v in simp] for simp in hull.simplices]
    return verts, faces


def _pad3(rows: np.ndarray) -> np.ndarray:
    if rows.shape[1] >= 3:
        return rows[:, :3]
    out = np.zeros((rows.shape[0], 3))
    out[:, : rows.shape[1]] = rows
    return out


def region_render_doc(calibration, region) -> dict:
    """Server-side render geometry: spheres for balls, sliced hulls otherwise."""
    dim = calibration.error_states.shape[1]
    d_pos = min(3, dim)
    lo, hi = _position_bounds(calibration, region)
    doc = {
        "form": region.form,
        "position_dims": d_pos,
        "bounds": {"lo": jsonfmt.float_vector(lo), "hi": jsonfmt.float_vector(hi)},
    }
    if region.form == "balls":
        centers = _pad3(np.atleast_2d(region.centers))
        doc["spheres"] = [
            {"center": jsonfmt.float_vector(c), "radius": jsonfmt.format_float(region.radius)}
            for c in centers
        ]
        return doc
    rendered = []
    for poly in region.polytopes:
        Ap, bp = _slice_halfspaces(poly.A, poly.b, poly.center_hint, d_pos, lo, hi)
        interior = _chebyshev_center(Ap, bp) if Ap is not None else None
        if interior is None:
            rendered.append({"empty": True, "vertices": [], "faces": []})
            continue
        verts, faces = _enumerate_vertices(Ap, bp, interior)
        rendered.append(
            {
                "empty": False,
                "vertices": jsonfmt.float_matrix(_pad3(verts)),
                "faces": faces,
            }
        )
    doc["polytopes"] = rendered
    return doc
