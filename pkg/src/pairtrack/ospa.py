"""Set-to-set tracking error: optimal subpattern assignment distance.

Penalizes localization error (capped at the cutoff) and cardinality
mismatch (cutoff per unmatched target), combined at order p and averaged
over the larger set.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist


@dataclass(frozen=True)
class OspaParams:
    """Cutoff in position units; order p weights large errors for p > 1."""

    cutoff: float = 100.0
    order: float = 1.0

    def __post_init__(self):
        if not self.cutoff > 0:
            raise ValueError(f"cutoff must be positive, got {self.cutoff}")
        if not self.order >= 1:
            raise ValueError(f"order must be at least 1, got {self.order}")


def _as_set(points):
    points = np.asarray(points, dtype=np.float64)
    if points.size == 0:
        return points.reshape(0, points.shape[1] if points.ndim == 2 else 0)
    return np.atleast_2d(points)


def ospa_distance(x_set, y_set, params=OspaParams()):
    """Distance between two finite point sets; empty-vs-empty is zero.

    The smaller set is optimally assigned into the larger one (exact
    linear-sum assignment on cutoff-capped distances); every unmatched
    point in the larger set costs the full cutoff.
    """
    x = _as_set(x_set)
    y = _as_set(y_set)
    m, n = x.shape[0], y.shape[0]
    if m == 0 and n == 0:
        return 0.0
    if m > 0 and n > 0 and x.shape[1] != y.shape[1]:
        raise ValueError(
            f"point dimensions differ: {x.shape[1]} vs {y.shape[1]}"
        )
    if m > n:
        x, y, m, n = y, x, n, m
    c = params.cutoff
    p = params.order
    if m == 0:
        return c  # pure cardinality penalty: (n c^p / n)^(1/p)
    cost = np.minimum(cdist(x, y), c) ** p
    rows, cols = linear_sum_assignment(cost)
    total = cost[rows, cols].sum() + (c**p) * (n - m)
    return float((total / n) ** (1.0 / p))
