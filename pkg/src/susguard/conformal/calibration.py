"""Closed-form full-conformal calibration over error states.

The calibrated region is C(eps) = {x : s(D; x) <= r} with s the
nearest-neighbor score under the chosen dissimilarity, r = alpha_(k) the
k-th smallest leave-one-out score inside the data, and
k = ceil((N+1)(1-eps)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .. import jsonfmt
from ..errors import (
    DegenerateInputError,
    InfeasibleMiscoverageError,
    TooFewErrorsError,
)
from .dissimilarity import Dissimilarity, LinearTransform
from .engine import batch_score, loo_alphas

EpsilonLike = "float | Fraction"


def _as_fraction(epsilon) -> Fraction:
    eps = Fraction(epsilon)
    if not 0 < eps <= 1:
        raise DegenerateInputError(f"epsilon must be in (0, 1], got {epsilon!r}")
    return eps


def compute_k(n_samples: int, epsilon) -> int:
    """k(eps) = ceil((N+1)(1-eps)), computed in exact rational arithmetic.

    Exactness matters at grid values like j/(N+1): float rounding of the
    product could otherwise push k past N and falsely report infeasibility.
    Fraction epsilons are honored exactly; float epsilons are taken at their
    exact binary value.
    """
    if n_samples < 1:
        raise DegenerateInputError("n_samples must be >= 1")
    eps = _as_fraction(epsilon)
    k = math.ceil(Fraction(n_samples + 1) * (1 - eps))
    if k > n_samples:
        raise InfeasibleMiscoverageError(
            f"epsilon={float(eps):.6g} < 1/(N+1) = {1.0 / (n_samples + 1):.6g}: "
            f"k={k} exceeds N={n_samples}"
        )
    return k


@dataclass(frozen=True)
class CalibrationResult:
    """Immutable calibration artifact; safe to share across threads."""

    error_states: np.ndarray  # (N, d)
    alphas: np.ndarray  # (N,) leave-one-out scores, data order
    epsilon: float
    k: int
    threshold_r: float
    dissimilarity: Dissimilarity

    @property
    def n(self) -> int:
        return len(self.error_states)

    @property
    def safe_states(self) -> np.ndarray | None:
        return self.dissimilarity.safe_states

    def threshold_for(self, epsilon) -> float:
        """Threshold r at a different eps without re-scoring the data."""
        k = compute_k(self.n, epsilon)
        if k < 1:
            raise InfeasibleMiscoverageError(f"epsilon={epsilon!r} leaves k={k} < 1")
        return float(np.sort(self.alphas, kind="stable")[k - 1])


def calibrate(error_states: np.ndarray, epsilon, dissimilarity: Dissimilarity) -> CalibrationResult:
    """Calibrate the sublevel-set region over the error states.

    Requires N >= 2 (the leave-one-out score needs a nonempty rest) and
    eps in [1/(N+1), N/(N+1)]; anything outside is an error, never a clamp.
    """
    pts = np.ascontiguousarray(np.atleast_2d(np.asarray(error_states, dtype=float)))
    n = len(pts)
    if n < 2:
        raise TooFewErrorsError(f"need at least 2 error states, got {n}")
    eps = _as_fraction(epsilon)
    if eps > Fraction(n, n + 1):
        raise InfeasibleMiscoverageError(
            f"epsilon={float(eps):.6g} > N/(N+1) = {n / (n + 1):.6g}: k would be < 1"
        )
    k = compute_k(n, eps)
    alphas = loo_alphas(dissimilarity, pts)
    r = float(np.sort(alphas, kind="stable")[k - 1])
    return CalibrationResult(
        error_states=pts,
        alphas=alphas,
        epsilon=float(eps),
        k=k,
        threshold_r=r,
        dissimilarity=dissimilarity,
    )


def score(calibration: CalibrationResult, x: np.ndarray) -> float:
    """Nearest-neighbor score s(D; x) of a single point."""
    return float(score_batch(calibration, np.atleast_2d(np.asarray(x, dtype=float)))[0])


def score_batch(calibration: CalibrationResult, xs: np.ndarray) -> np.ndarray:
    return batch_score(calibration.dissimilarity, calibration.error_states, xs)


def contains(calibration: CalibrationResult, x: np.ndarray) -> bool:
    return bool(score(calibration, x) <= calibration.threshold_r)


def contains_batch(calibration: CalibrationResult, xs: np.ndarray) -> np.ndarray:
    return score_batch(calibration, xs) <= calibration.threshold_r


@dataclass(frozen=True)
class PValueDetail:
    p: float
    score: float
    n_strictly_below: int
    at_floor: bool  # p equals 1/(N+1): x is outside C(eps) for every feasible eps


def p_value_detail(calibration_data: np.ndarray, dissimilarity: Dissimilarity, x: np.ndarray) -> PValueDetail:
    pts = np.atleast_2d(np.asarray(calibration_data, dtype=float))
    n = len(pts)
    if n < 2:
        raise TooFewErrorsError(f"need at least 2 calibration points, got {n}")
    alphas = loo_alphas(dissimilarity, pts)
    s = float(batch_score(dissimilarity, pts, np.atleast_2d(np.asarray(x, dtype=float)))[0])
    m = int((alphas < s).sum())
    # single division so the double matches the grid value j/(N+1) exactly
    p = (n + 1 - m) / (n + 1)
    return PValueDetail(p=p, score=s, n_strictly_below=m, at_floor=m == n)


def p_value(calibration_data: np.ndarray, dissimilarity: Dissimilarity, x: np.ndarray) -> float:
    """Smallest eps at which x falls outside C(eps).

    Computed analytically as 1 - m/(N+1) with m = #{alpha_i < s(x)}; the
    test suite holds this to the brute-force scan over the feasible grid
    eps in {j/(N+1)}. Values at the floor 1/(N+1) mean x stayed outside the
    region for every feasible eps.
    """
    return p_value_detail(calibration_data, dissimilarity, x).p


def p_value_batch(calibration: CalibrationResult, xs: np.ndarray) -> np.ndarray:
    """Vectorized p-values against an existing calibration's data."""
    s = score_batch(calibration, xs)
    m = (calibration.alphas[None, :] < s[:, None]).sum(axis=1)
    return (calibration.n + 1 - m) / (calibration.n + 1)


def split_conformal_threshold(calibration_scores: np.ndarray, epsilon) -> float:
    """k(eps)-th smallest calibration score (split-conformal comparison only)."""
    scores = np.asarray(calibration_scores, dtype=float).ravel()
    if scores.size == 0:
        raise DegenerateInputError("calibration_scores must be non-empty")
    k = compute_k(scores.size, epsilon)
    if k < 1:
        raise InfeasibleMiscoverageError("epsilon leaves k < 1")
    return float(np.sort(scores, kind="stable")[k - 1])


@dataclass(frozen=True)
class SwapCertificate:
    member: bool
    swap_scores: np.ndarray  # (N,) s_i^x
    query_score: float  # s_{N+1}^x
    k: int


def full_conformal_swap_certificate(
    data: np.ndarray, x: np.ndarray, epsilon, dissimilarity: Dissimilarity
) -> SwapCertificate:
    """Explicit swap-score membership test.

    For each i, x replaces x_i in the data and x_i is scored against the
    swapped set; membership holds when s_{N+1}^x is at most the k-th
    smallest swap score. This is the independent oracle for the closed-form
    region, so it deliberately rebuilds every swapped set instead of using
    the min(alpha_i, d(x, x_i)) shortcut.
    """
    pts = np.atleast_2d(np.asarray(data, dtype=float))
    n = len(pts)
    if n < 2:
        raise TooFewErrorsError(f"need at least 2 data points, got {n}")
    q = np.asarray(x, dtype=float).ravel()
    k = compute_k(n, epsilon)
    if k < 1:
        raise InfeasibleMiscoverageError("epsilon leaves k < 1")
    swap = np.empty(n)
    for i in range(n):
        swapped = pts.copy()
        swapped[i] = q
        swap[i] = batch_score(dissimilarity, swapped, pts[i : i + 1])[0]
    s_query = float(batch_score(dissimilarity, pts, q[None, :])[0])
    kth = float(np.sort(swap, kind="stable")[k - 1])
    return SwapCertificate(member=bool(s_query <= kth), swap_scores=swap, query_score=s_query, k=k)


def full_conformal_swap_oracle(data: np.ndarray, x: np.ndarray, epsilon, dissimilarity: Dissimilarity) -> bool:
    return full_conformal_swap_certificate(data, x, epsilon, dissimilarity).member


# -- calibration export ------------------------------------------------------


def export_calibration(calibration: CalibrationResult) -> dict:
    """JSON-ready document; floats as 17-significant-digit decimal strings."""
    diss = calibration.dissimilarity
    doc = {
        "epsilon": jsonfmt.format_float(calibration.epsilon),
        "k": calibration.k,
        "threshold_r": jsonfmt.format_float(calibration.threshold_r),
        "dissimilarity_kind": diss.kind,
        "error_states": jsonfmt.float_matrix(calibration.error_states),
        "alphas": jsonfmt.float_vector(calibration.alphas),
    }
    if diss.safe_states is not None:
        doc["safe_states"] = jsonfmt.float_matrix(diss.safe_states)
    if diss.kind == "transformed":
        doc["transform"] = {
            "mean": jsonfmt.float_vector(diss.transform.mean),
            "components": jsonfmt.float_matrix(diss.transform.components),
            "inner_kind": diss.inner_kind,
        }
    return doc


def load_calibration(doc: dict) -> CalibrationResult:
    """Rebuild a CalibrationResult bit-exactly from its export document."""
    kind = doc["dissimilarity_kind"]
    safe = jsonfmt.parse_matrix(doc["safe_states"]) if "safe_states" in doc else None
    if kind == "transformed":
        tr = doc["transform"]
        transform = LinearTransform(
            mean=jsonfmt.parse_vector(tr["mean"]),
            components=jsonfmt.parse_matrix(tr["components"]),
        )
        diss = Dissimilarity.transformed(transform, tr["inner_kind"], safe_states=safe)
    elif kind in ("unsafe_safe_squared", "neg_safe_distance"):
        diss = Dissimilarity(kind=kind, safe_states=safe)
    else:
        diss = Dissimilarity(kind=kind)
    return CalibrationResult(
        error_states=jsonfmt.parse_matrix(doc["error_states"]),
        alphas=jsonfmt.parse_vector(doc["alphas"]),
        epsilon=jsonfmt.parse_float(doc["epsilon"]),
        k=int(doc["k"]),
        threshold_r=jsonfmt.parse_float(doc["threshold_r"]),
        dissimilarity=diss,
    )
