"""Independent brute-force oracles shared by unit and acceptance tests."""
import itertools
import math
from decimal import ROUND_CEILING, Decimal

import numpy as np
from scipy import stats


def naive_density(points, H, z):
    """Direct double loop with an explicit inverse and determinant."""
    Hinv = np.linalg.inv(H)
    D = len(z)
    norm = (2 * math.pi) ** (D / 2) * math.sqrt(np.linalg.det(H))
    total = 0.0
    for p in points:
        u = z - p
        total += math.exp(-0.5 * u @ Hinv @ u) / norm
    return total / len(points)


def optimal_two_partition_sse(points):
    """Exhaustive oracle: best SSE over all 2^n assignments into two non-empty groups."""
    best = np.inf
    n = len(points)
    for mask in itertools.product([0, 1], repeat=n):
        m = np.array(mask, dtype=bool)
        if m.all() or not m.any():
            continue
        sse = sum(((points[g] - points[g].mean(axis=0)) ** 2).sum() for g in (m, ~m))
        best = min(best, sse)
    return best


def brute_force_wilcoxon_p(d):
    """Two-sided p by listing all 2^n sign flips of the observed ranks."""
    d = np.asarray(d, dtype=float)
    d = d[d != 0]
    ranks = stats.rankdata(np.abs(d))
    obs = ranks[d > 0].sum()
    lower = upper = 0
    for signs in itertools.product([0, 1], repeat=len(d)):
        w = ranks[np.array(signs, dtype=bool)].sum()
        lower += w <= obs + 1e-9
        upper += w >= obs - 1e-9
    return min(1.0, 2 * min(lower, upper) / 2 ** len(d))


def decimal_ceil(alpha, n):
    """ceil(alpha * n) in decimal arithmetic on the shortest repr of alpha."""
    return int((Decimal(repr(float(alpha))) * n).to_integral_value(rounding=ROUND_CEILING))
