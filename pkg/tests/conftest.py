import numpy as np
from scipy.optimize import linear_sum_assignment


def pairing_distance(a, b) -> float:
    """Largest matched-pair distance between two equal-size eigenvalue sets.

    Sorting complex spectra elementwise misorders conjugate pairs whose real
    parts agree to rounding, so comparisons here go through an optimal
    assignment instead.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    assert a.shape == b.shape
    cost = np.abs(a[:, None] - b[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max())
