"""Independent brute-force oracles used to freeze expected test values.

Everything here is deliberately written with plain Python loops and the math
module (no package kernels), so agreement with the implementation is
meaningful.
"""

from __future__ import annotations

import math
from fractions import Fraction


def dist_euclidean(a, b) -> float:
    return math.sqrt(sum((ai - bi) ** 2 for ai, bi in zip(a, b)))


def dist_squared(a, b) -> float:
    return sum((ai - bi) ** 2 for ai, bi in zip(a, b))


def dist_unsafe_safe_squared(a, b, safe) -> float:
    return dist_squared(a, b) - min(dist_squared(y, b) for y in safe)


def make_pair_diss(kind: str, safe=None):
    if kind == "euclidean":
        return dist_euclidean
    if kind == "squared_euclidean":
        return dist_squared
    if kind == "unsafe_safe_squared":
        return lambda a, b: dist_unsafe_safe_squared(a, b, safe)
    if kind == "neg_safe_distance":
        return lambda a, b: -min(dist_euclidean(y, b) for y in safe)
    raise ValueError(kind)


def loo_alphas_oracle(points, pair_diss):
    """Exhaustive leave-one-out alpha_i over all ordered pairs."""
    out = []
    for i, xi in enumerate(points):
        out.append(min(pair_diss(xj, xi) for j, xj in enumerate(points) if j != i))
    return out


def k_oracle(n: int, epsilon) -> int:
    k = math.ceil(Fraction(n + 1) * (1 - Fraction(epsilon)))
    if k > n:
        raise ValueError("infeasible epsilon")
    return k


def threshold_oracle(points, epsilon, pair_diss) -> float:
    alphas = sorted(loo_alphas_oracle(points, pair_diss))
    return alphas[k_oracle(len(points), epsilon) - 1]


def nn_score_oracle(points, x, pair_diss) -> float:
    return min(pair_diss(p, x) for p in points)


def contains_oracle(points, x, epsilon, pair_diss) -> bool:
    return nn_score_oracle(points, x, pair_diss) <= threshold_oracle(points, epsilon, pair_diss)


def p_value_scan_oracle(points, x, pair_diss) -> float:
    """Smallest grid eps = j/(N+1) at which x is excluded; 1.0 if never."""
    n = len(points)
    for j in range(1, n + 1):
        eps = Fraction(j, n + 1)
        if not contains_oracle(points, x, eps, pair_diss):
            return float(eps)
    return 1.0


def swap_membership_oracle(points, x, epsilon, pair_diss) -> bool:
    """Membership per the explicit swap construction (Eq.-level definition)."""
    n = len(points)
    k = k_oracle(n, epsilon)
    swap_scores = []
    for i in range(n):
        swapped = [x if j == i else pj for j, pj in enumerate(points)]
        swap_scores.append(min(pair_diss(a, points[i]) for a in swapped))
    s_query = min(pair_diss(p, x) for p in points)
    return s_query <= sorted(swap_scores)[k - 1]


def neg_log_kde_oracle(points, queries, bandwidth: float):
    """-log of a Gaussian KDE via logsumexp, stable at tiny bandwidths."""
    gamma = 1.0 / (2.0 * bandwidth)
    out = []
    for q in queries:
        exps = [-gamma * dist_squared(p, q) for p in points]
        mx = max(exps)
        lse = mx + math.log(sum(math.exp(e - mx) for e in exps))
        out.append(-lse)
    return out


def spearman_oracle(a, b) -> float:
    """Spearman rank correlation via Pearson on midranks."""

    def midranks(v):
        order = sorted(range(len(v)), key=lambda i: v[i])
        ranks = [0.0] * len(v)
        i = 0
        while i < len(v):
            j = i
            while j + 1 < len(v) and v[order[j + 1]] == v[order[i]]:
                j += 1
            avg = (i + j) / 2.0 + 1.0
            for t in range(i, j + 1):
                ranks[order[t]] = avg
            i = j + 1
        return ranks

    ra, rb = midranks(list(a)), midranks(list(b))
    n = len(ra)
    ma, mb = sum(ra) / n, sum(rb) / n
    cov = sum((x - ma) * (y - mb) for x, y in zip(ra, rb))
    va = math.sqrt(sum((x - ma) ** 2 for x in ra))
    vb = math.sqrt(sum((y - mb) ** 2 for y in rb))
    return cov / (va * vb)
