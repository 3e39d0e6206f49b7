import numpy as np
from scipy.optimize import linear_sum_assignment


def multiset_err(a, b):
    """Largest pairing distance between two eigenvalue multisets."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    assert a.shape == b.shape, f"multiset sizes differ: {a.shape} vs {b.shape}"
    cost = np.abs(a[:, None] - b[None, :])
    r, c = linear_sum_assignment(cost)
    return float(cost[r, c].max())
