"""Geometry tests: explicit region forms, halfspace selection, pruning,
point-cloud approximation, and the plot/export helpers.

Expected interval endpoints and face enumerations come from the independent
oracles below; membership equivalence is checked against the score route,
which uses entirely different arithmetic for the polyhedral form.
"""

import json

import numpy as np
import pytest

from susguard.conformal import (
    CalibrationResult,
    Dissimilarity,
    calibrate,
    contains_batch,
)
from susguard.errors import (
    ConfigError,
    DegenerateHalfspaceError,
    DimensionMismatchError,
    UnsupportedDissimilarityError,
)
from susguard.geometry import (
    Polytope,
    SusRegion,
    approximate_point_cloud,
    build_region,
    polytope_slice,
    polytope_slice_mesh,
    polytope_vertices,
    prune_halfspaces,
    region_contains,
    region_contains_batch,
    region_from_json,
    region_to_json,
    select_separating_halfspace,
)

# -- oracles -------------------------------------------------------------------


def interval_union_contains(intervals, x):
    return any(lo <= x <= hi for lo, hi in intervals)


def enumerate_face_distances(A, b, x):
    """Signed distance of x to every face, plain Python arithmetic."""
    out = []
    for i in range(len(b)):
        norm = sum(v * v for v in A[i]) ** 0.5
        out.append((sum(av * xv for av, xv in zip(A[i], x)) - b[i]) / norm)
    return out


def square_polytope():
    A = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
    return Polytope(A=A, b=np.ones(4), center_hint=np.zeros(2))


# -- build_region --------------------------------------------------------------


def test_build_region_euclidean_line_is_interval_union():
    cal = calibrate(np.array([[0.0], [1.0], [3.0]]), 0.25, Dissimilarity.euclidean())
    region = build_region(cal)
    assert region.form == "balls"
    assert region.radius == 2.0
    np.testing.assert_array_equal(region.centers, [[0.0], [1.0], [3.0]])
    intervals = [(-2.0, 2.0), (-1.0, 3.0), (1.0, 5.0)]
    xs = np.linspace(-4.0, 7.0, 2001)[:, None]
    got = region_contains_batch(region, xs)
    want = np.array([interval_union_contains(intervals, float(x)) for x in xs[:, 0]])
    np.testing.assert_array_equal(got, want)


def test_build_region_squared_euclidean_takes_sqrt_radius():
    data = np.array([[0.0], [1.0], [3.0]])
    cal = calibrate(data, 0.25, Dissimilarity.squared_euclidean())
    region = build_region(cal)
    assert region.form == "balls"
    assert cal.threshold_r == 4.0
    assert region.radius == 2.0
    # same balls as the euclidean calibration at matched level
    reg_e = build_region(calibrate(data, 0.25, Dissimilarity.euclidean()))
    xs = np.linspace(-4.0, 7.0, 1001)[:, None]
    np.testing.assert_array_equal(region_contains_batch(region, xs), region_contains_batch(reg_e, xs))


def test_build_region_negative_squared_threshold_rejected():
    cal = CalibrationResult(
        error_states=np.array([[0.0]]),
        alphas=np.array([1.0]),
        epsilon=0.5,
        k=1,
        threshold_r=-1.0,
        dissimilarity=Dissimilarity.squared_euclidean(),
    )
    with pytest.raises(UnsupportedDissimilarityError):
        build_region(cal)


def test_build_region_unsupported_kinds():
    safe = np.array([[5.0, 5.0]])
    data = np.array([[0.0, 0.0], [1.0, 0.0]])
    cal = calibrate(data, 0.5, Dissimilarity.neg_safe_distance(safe))
    with pytest.raises(UnsupportedDissimilarityError):
        build_region(cal)


def test_build_region_polyhedra_face_values():
    safe = np.array([[2.0, 0.0], [0.0, 3.0], [-1.0, -1.0]])
    errors = np.array([[0.0, 0.0], [4.0, 1.0]])
    cal = calibrate(errors, 0.5, Dissimilarity.unsafe_safe_squared(safe))
    region = build_region(cal)
    assert region.form == "polyhedra"
    assert region.n_components == len(errors)
    r = cal.threshold_r
    for poly, xi in zip(region.polytopes, errors):
        assert poly.n_faces == len(safe)
        np.testing.assert_array_equal(poly.center_hint, xi)
        for j, yj in enumerate(safe):
            np.testing.assert_allclose(poly.A[j], yj - xi, rtol=1e-15)
            want_b = (r + float(yj @ yj) - float(xi @ xi)) / 2.0
            np.testing.assert_allclose(poly.b[j], want_b, rtol=1e-15)


def test_build_region_halfline_example_matches_score_membership():
    from fractions import Fraction

    cal = calibrate(np.array([[0.0], [4.0]]), Fraction(1, 3), Dissimilarity.unsafe_safe_squared(np.array([[2.0]])))
    assert cal.threshold_r == 12.0
    region = build_region(cal)
    xs = np.linspace(-20.0, 20.0, 10_001)[:, None]
    np.testing.assert_array_equal(region_contains_batch(region, xs), contains_batch(cal, xs))


def test_build_region_zero_norm_face_dropped_with_warning():
    safe = np.array([[1.0, 1.0], [3.0, 0.0]])
    errors = np.array([[1.0, 1.0], [0.0, 0.0]])  # first error state equals a safe state
    cal = calibrate(errors, 0.5, Dissimilarity.unsafe_safe_squared(safe))
    with pytest.warns(RuntimeWarning):
        region = build_region(cal)
    assert region.polytopes[0].n_faces == 1
    assert region.polytopes[1].n_faces == 2


# -- region_contains -----------------------------------------------------------


def test_region_contains_ball_examples():
    region = SusRegion(form="balls", epsilon=0.1, source_calibration_id="x", centers=np.array([[0.0]]), radius=1.0)
    assert region_contains(region, [0.5]) is True
    assert region_contains(region, [1.5]) is False


def test_region_contains_dimension_mismatch():
    region = SusRegion(form="balls", epsilon=0.1, source_calibration_id="x", centers=np.array([[0.0, 0.0]]), radius=1.0)
    with pytest.raises(DimensionMismatchError):
        region_contains(region, [0.5])


@pytest.mark.parametrize("kind", ["euclidean", "squared_euclidean"])
def test_region_score_equivalence_balls(kind):
    rng = np.random.default_rng(7)
    data = rng.normal(size=(25, 2)) * 1.5
    diss = Dissimilarity.euclidean() if kind == "euclidean" else Dissimilarity.squared_euclidean()
    cal = calibrate(data, 0.2, diss)
    region = build_region(cal)
    xs = rng.uniform(-5, 5, size=(10_000, 2))
    np.testing.assert_array_equal(region_contains_batch(region, xs), contains_batch(cal, xs))


def test_region_score_equivalence_polyhedra():
    rng = np.random.default_rng(8)
    errors = rng.normal(size=(15, 3))
    safe = rng.normal(size=(20, 3)) + np.array([2.5, 0.0, 0.0])
    cal = calibrate(errors, 0.2, Dissimilarity.unsafe_safe_squared(safe))
    region = build_region(cal)
    xs = rng.uniform(-4, 6, size=(10_000, 3))
    np.testing.assert_array_equal(region_contains_batch(region, xs), contains_batch(cal, xs))


# -- select_separating_halfspace -----------------------------------------------


def test_halfspace_square_right_face():
    poly = square_polytope()
    a, b = select_separating_halfspace(poly, [2.0, 0.0])
    np.testing.assert_array_equal(a, [1.0, 0.0])
    assert b == 1.0
    d = enumerate_face_distances(poly.A, poly.b, [2.0, 0.0])
    assert max(d) == 1.0 and d.index(max(d)) == 0


def test_halfspace_tie_breaks_to_lowest_index():
    poly = square_polytope()
    a, b = select_separating_halfspace(poly, [0.0, 0.0])
    np.testing.assert_array_equal(a, poly.A[0])
    assert b == poly.b[0]


def test_halfspace_inside_reference_picks_closest_face():
    poly = square_polytope()
    a, b = select_separating_halfspace(poly, [0.2, -0.5])
    d = enumerate_face_distances(poly.A, poly.b, [0.2, -0.5])
    assert all(v < 0 for v in d)
    assert d.index(max(d)) == 3
    np.testing.assert_array_equal(a, poly.A[3])


def test_halfspace_outside_reference_is_excluded_by_returned_face():
    rng = np.random.default_rng(9)
    errors = rng.normal(size=(6, 2))
    safe = rng.normal(size=(8, 2)) + 2.0
    region = build_region(calibrate(errors, 0.3, Dissimilarity.unsafe_safe_squared(safe)))
    for poly in region.polytopes:
        for _ in range(20):
            x = rng.uniform(-6, 6, size=2)
            if poly.contains(x):
                continue
            a, b = select_separating_halfspace(poly, x)
            assert a @ x > b  # imposing a.x > b keeps x excluded


def test_halfspace_degenerate_raises():
    poly = Polytope(A=np.array([[0.0, 0.0], [1.0, 0.0]]), b=np.array([1.0, 1.0]), center_hint=np.zeros(2))
    with pytest.raises(DegenerateHalfspaceError):
        select_separating_halfspace(poly, [2.0, 0.0])


def test_halfspace_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        select_separating_halfspace(square_polytope(), [1.0, 2.0, 3.0])


# -- prune_halfspaces ----------------------------------------------------------


def _membership_sample(rng, n=10_000, scale=4.0, dim=2):
    return rng.uniform(-scale, scale, size=(n, dim))


def test_prune_removes_duplicate_faces():
    poly = square_polytope()
    dup = Polytope(A=np.vstack([poly.A, poly.A]), b=np.concatenate([poly.b, poly.b]), center_hint=poly.center_hint)
    pruned = prune_halfspaces(dup, max_faces=4)
    assert pruned.n_faces == 4
    rng = np.random.default_rng(10)
    xs = _membership_sample(rng)
    got = (xs @ pruned.A.T <= pruned.b).all(axis=1)
    want = (xs @ poly.A.T <= poly.b).all(axis=1)
    np.testing.assert_array_equal(got, want)


def test_prune_lp_drops_implied_parallel_face():
    poly = square_polytope()
    loose = Polytope(
        A=np.vstack([[1.0, 0.0], poly.A]),  # x <= 3 implied by x <= 1
        b=np.concatenate([[3.0], poly.b]),
        center_hint=poly.center_hint,
    )
    pruned = prune_halfspaces(loose, max_faces=4, method="lp")
    assert pruned.n_faces == 4
    rng = np.random.default_rng(11)
    xs = _membership_sample(rng)
    got = (xs @ pruned.A.T <= pruned.b).all(axis=1)
    want = (xs @ poly.A.T <= poly.b).all(axis=1)
    np.testing.assert_array_equal(got, want)


@pytest.mark.parametrize("method", ["lp", "sampling"])
def test_prune_below_irredundant_count_is_superset(method):
    # regular octagon: every face irredundant, force down to 5
    ang = np.arange(8) * (2 * np.pi / 8)
    A = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    poly = Polytope(A=A, b=np.ones(8), center_hint=np.zeros(2))
    pruned = prune_halfspaces(poly, max_faces=5, method=method)
    assert pruned.n_faces <= 5
    rng = np.random.default_rng(12)
    xs = _membership_sample(rng)
    inside_orig = (xs @ poly.A.T <= poly.b).all(axis=1)
    inside_pruned = (xs @ pruned.A.T <= pruned.b).all(axis=1)
    assert np.all(inside_pruned[inside_orig])  # superset only


def test_prune_noop_when_small():
    poly = square_polytope()
    pruned = prune_halfspaces(poly, max_faces=10)
    assert pruned.n_faces == 4


def test_prune_validation():
    poly = square_polytope()
    with pytest.raises(ConfigError):
        prune_halfspaces(poly, max_faces=2)
    with pytest.raises(ConfigError):
        prune_halfspaces(poly, max_faces=4, method="magic")


# -- approximate_point_cloud ---------------------------------------------------


def test_point_cloud_inner_epsilon_example():
    rng = np.random.default_rng(13)
    pts = rng.normal(size=(1000, 3))
    region = approximate_point_cloud(pts, target_coverage=0.95, subsample_n=200, inflate=0.0, rng_seed=0)
    assert region.extra["fallback"] is False
    assert region.extra["inner_epsilon"] == 0.0625
    assert region.epsilon == 0.0625
    assert len(region.centers) == 200


def test_point_cloud_fallback_when_target_below_subsample():
    rng = np.random.default_rng(14)
    pts = rng.normal(size=(100, 2))
    region = approximate_point_cloud(pts, target_coverage=0.5, subsample_n=200, inflate=0.3, rng_seed=0)
    assert region.extra["fallback"] is True
    assert len(region.centers) == 50
    assert region.radius == 0.3


def test_point_cloud_inflate_adds_exactly():
    rng = np.random.default_rng(15)
    pts = rng.normal(size=(400, 3))
    r0 = approximate_point_cloud(pts, 0.9, 100, inflate=0.0, rng_seed=3)
    r1 = approximate_point_cloud(pts, 0.9, 100, inflate=0.2, rng_seed=3)
    assert r1.radius == r0.radius + 0.2
    np.testing.assert_array_equal(r0.centers, r1.centers)


def test_point_cloud_coverage_across_seeds():
    rng = np.random.default_rng(16)
    pts = rng.normal(size=(400, 3)) * 1.3
    target = 0.9
    covs = []
    for seed in range(100):
        region = approximate_point_cloud(pts, target, 100, inflate=0.0, rng_seed=seed)
        covs.append(region_contains_batch(region, pts).mean())
    covs = np.asarray(covs)
    se = covs.std(ddof=1) / np.sqrt(len(covs))
    assert covs.mean() >= target - 3 * se


def test_point_cloud_validation():
    pts = np.zeros((10, 2))
    with pytest.raises(ConfigError):
        approximate_point_cloud(pts, 1.5, 5, 0.0)
    # subsample above the cloud size always satisfies target <= n: fallback
    region = approximate_point_cloud(np.random.default_rng(0).normal(size=(10, 2)), 0.99, 11, 0.0)
    assert region.extra["fallback"] is True
    assert len(region.centers) == 10


# -- vertex/slice exports ------------------------------------------------------


def test_polytope_vertices_square_ccw():
    verts = polytope_vertices(square_polytope())
    assert verts.shape == (4, 2)
    corners = {(round(x, 9), round(y, 9)) for x, y in verts}
    assert corners == {(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)}
    area2 = sum(
        verts[i, 0] * verts[(i + 1) % 4, 1] - verts[(i + 1) % 4, 0] * verts[i, 1] for i in range(4)
    )
    assert area2 > 0  # counter-clockwise


def test_polytope_vertices_unbounded_needs_bounds():
    half = Polytope(A=np.array([[1.0, 0.0]]), b=np.array([0.0]), center_hint=np.zeros(2))
    lo, hi = np.array([-2.0, -2.0]), np.array([2.0, 2.0])
    verts = polytope_vertices(half, bounds=(lo, hi))
    assert len(verts) == 4
    assert np.all(verts[:, 0] <= 1e-9)


def test_polytope_vertices_empty():
    empty = Polytope(A=np.array([[1.0, 0.0], [-1.0, 0.0]]), b=np.array([-1.0, -1.0]), center_hint=np.zeros(2))
    assert len(polytope_vertices(empty)) == 0


def test_polytope_slice_of_box():
    eye = np.eye(3)
    box = Polytope(A=np.vstack([eye, -eye]), b=np.ones(6), center_hint=np.zeros(3))
    sl = polytope_slice(box, [2], [0.5])
    verts = polytope_vertices(sl)
    assert verts.shape == (4, 2)
    sl_empty = polytope_slice(box, [2], [1.5])
    assert len(polytope_vertices(sl_empty)) == 0


def test_polytope_slice_mesh_of_box():
    eye = np.eye(4)
    box = Polytope(A=np.vstack([eye, -eye]), b=np.ones(8), center_hint=np.zeros(4))
    bounds = (np.full(3, -2.0), np.full(3, 2.0))
    mesh = polytope_slice_mesh(box, [3], [0.0], bounds)
    assert mesh is not None
    assert len(mesh["vertices"]) == 8  # cube corners
    assert all(len(f) == 3 for f in mesh["faces"])
    assert polytope_slice_mesh(box, [3], [5.0], bounds) is None


# -- JSON export ---------------------------------------------------------------


def test_region_json_round_trip_balls():
    rng = np.random.default_rng(17)
    cal = calibrate(rng.normal(size=(12, 2)), 0.25, Dissimilarity.euclidean())
    region = build_region(cal)
    doc = json.loads(json.dumps(region_to_json(region)))
    back = region_from_json(doc)
    assert back.form == "balls"
    assert back.radius == region.radius
    assert back.source_calibration_id == region.source_calibration_id
    np.testing.assert_array_equal(back.centers, region.centers)
    assert isinstance(doc["radius"], str)


def test_region_json_round_trip_polyhedra():
    rng = np.random.default_rng(18)
    errors = rng.normal(size=(5, 2))
    safe = rng.normal(size=(7, 2)) + 1.5
    region = build_region(calibrate(errors, 0.4, Dissimilarity.unsafe_safe_squared(safe)))
    doc = json.loads(json.dumps(region_to_json(region)))
    back = region_from_json(doc)
    assert back.form == "polyhedra"
    assert back.epsilon == region.epsilon
    for p0, p1 in zip(region.polytopes, back.polytopes):
        np.testing.assert_array_equal(p0.A, p1.A)
        np.testing.assert_array_equal(p0.b, p1.b)
        np.testing.assert_array_equal(p0.center_hint, p1.center_hint)
