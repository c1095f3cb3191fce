"""Pure-numpy kernel for the L1-constrained rank-1 decomposition.

Reference implementation of the hot loop inside the sparse solver; the
compiled twin in `_pmd_cy` implements the identical algorithm.  Backend
selection happens in `_backend`.
"""

import numpy as np

BACKEND_NAME = "numpy"

BISECT_WIDTH = 1e-10  # absolute bracket width on the soft threshold


def soft_threshold(v: np.ndarray, delta: float) -> np.ndarray:
    """Shrink toward zero: sign(v) * max(|v| - delta, 0)."""
    if delta < 0:
        raise ValueError("threshold must be non-negative")
    return np.sign(v) * np.maximum(np.abs(v) - delta, 0.0)


def l1_unit_project(a: np.ndarray, c: float) -> tuple[np.ndarray, float]:
    """Soft threshold and renormalize so that ||u||_2 = 1 and ||u||_1 <= c.

    The threshold is 0 when the normalized input already satisfies the L1
    budget, otherwise found by bisection on [0, max|a_i|] until the bracket
    is narrower than 1e-10.
    """
    a = np.asarray(a, dtype=np.float64)
    if not np.any(a):
        raise ValueError("cannot project an all-zero vector")
    u = a / np.linalg.norm(a)
    if np.abs(u).sum() <= c:
        return u, 0.0
    lo, hi = 0.0, float(np.max(np.abs(a)))
    while hi - lo > BISECT_WIDTH:
        mid = 0.5 * (lo + hi)
        s = soft_threshold(a, mid)
        # mid < max|a| keeps at least one entry alive, so the norm is positive
        if np.abs(s).sum() / np.linalg.norm(s) > c:
            lo = mid
        else:
            hi = mid
    delta = 0.5 * (lo + hi)
    s = soft_threshold(a, delta)
    return s / np.linalg.norm(s), delta


def rank_one_pmd(Z: np.ndarray, v0: np.ndarray, c1: float, c2: float,
                 max_iter: int, tol: float):
    """Alternating maximization of u'Zv under unit-L2 and L1 budgets.

    Returns (u, v, n_iter, converged, objective), where `objective` is the
    value of u'Zv after each full iteration (nondecreasing by construction).
    """
    Z = np.asarray(Z, dtype=np.float64)
    v = np.asarray(v0, dtype=np.float64)
    v = v / np.linalg.norm(v)
    u = np.zeros(Z.shape[0])
    objective = []
    n_iter = 0
    converged = False
    for it in range(max_iter):
        u_new, _ = l1_unit_project(Z @ v, c1)
        w = Z.T @ u_new
        v_new, _ = l1_unit_project(w, c2)
        objective.append(float(w @ v_new))
        step = max(np.max(np.abs(u_new - u)), np.max(np.abs(v_new - v)))
        u, v = u_new, v_new
        n_iter = it + 1
        if step < tol:
            converged = True
            break
    return u, v, n_iter, converged, np.asarray(objective)
