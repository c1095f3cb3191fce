# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel for the L1-constrained rank-1 decomposition.

Same algorithm as `_pmd_numpy`; exists because the alternating loop with
its inner bisection dominates permutation and bootstrap runs of the sparse
solver.  Keep the two implementations in lockstep.
"""

from libc.math cimport fabs, sqrt
from libc.stdlib cimport free, malloc

import numpy as np

BACKEND_NAME = "cython"

cdef double BISECT_WIDTH = 1e-10


cdef inline double _soft(double x, double delta) nogil:
    if x > delta:
        return x - delta
    if x < -delta:
        return x + delta
    return 0.0


cdef double _l1_unit_project(double* a, double* out, Py_ssize_t d, double c) except -1.0:
    """Writes the projected unit vector into `out`; returns the threshold."""
    cdef Py_ssize_t i
    cdef double norm2 = 0.0, norm1 = 0.0, amax = 0.0, av
    for i in range(d):
        av = fabs(a[i])
        norm2 += a[i] * a[i]
        norm1 += av
        if av > amax:
            amax = av
    if norm2 == 0.0:
        raise ValueError("cannot project an all-zero vector")
    norm2 = sqrt(norm2)
    if norm1 / norm2 <= c:
        for i in range(d):
            out[i] = a[i] / norm2
        return 0.0
    cdef double lo = 0.0, hi = amax, mid, s, s1, s2
    while hi - lo > BISECT_WIDTH:
        mid = 0.5 * (lo + hi)
        s1 = 0.0
        s2 = 0.0
        for i in range(d):
            s = _soft(a[i], mid)
            s1 += fabs(s)
            s2 += s * s
        if s1 / sqrt(s2) > c:
            lo = mid
        else:
            hi = mid
    cdef double delta = 0.5 * (lo + hi)
    s2 = 0.0
    for i in range(d):
        out[i] = _soft(a[i], delta)
        s2 += out[i] * out[i]
    s2 = sqrt(s2)
    for i in range(d):
        out[i] /= s2
    return delta


def soft_threshold(v, double delta):
    """Shrink toward zero: sign(v) * max(|v| - delta, 0)."""
    if delta < 0:
        raise ValueError("threshold must be non-negative")
    arr = np.ascontiguousarray(v, dtype=np.float64)
    out = np.empty_like(arr)
    cdef double[::1] src = arr.ravel()
    cdef double[::1] dst = out.ravel()
    cdef Py_ssize_t i
    for i in range(src.shape[0]):
        dst[i] = _soft(src[i], delta)
    return out


def l1_unit_project(a, double c):
    """Soft threshold and renormalize; see the numpy twin for semantics."""
    arr = np.ascontiguousarray(a, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError("expected a 1-d vector")
    out = np.empty_like(arr)
    cdef double[::1] src = arr
    cdef double[::1] dst = out
    cdef double delta = _l1_unit_project(&src[0], &dst[0], src.shape[0], c)
    return out, delta


def rank_one_pmd(Z, v0, double c1, double c2, int max_iter, double tol):
    """Alternating maximization of u'Zv; mirrors `_pmd_numpy.rank_one_pmd`."""
    Zc = np.ascontiguousarray(Z, dtype=np.float64)
    cdef double[:, ::1] zm = Zc
    cdef Py_ssize_t p = zm.shape[0], q = zm.shape[1]
    u_arr = np.zeros(p, dtype=np.float64)
    v_arr = np.ascontiguousarray(v0, dtype=np.float64).copy()
    obj_arr = np.empty(max_iter, dtype=np.float64)
    cdef double[::1] u = u_arr
    cdef double[::1] v = v_arr
    cdef double[::1] obj = obj_arr
    cdef double* zv = <double*> malloc(p * sizeof(double))
    cdef double* w = <double*> malloc(q * sizeof(double))
    cdef double* u_new = <double*> malloc(p * sizeof(double))
    cdef double* v_new = <double*> malloc(q * sizeof(double))
    if zv == NULL or w == NULL or u_new == NULL or v_new == NULL:
        free(zv); free(w); free(u_new); free(v_new)
        raise MemoryError()
    cdef Py_ssize_t i, j, it
    cdef int n_iter = 0
    cdef bint converged = False
    cdef double acc, step, d, vnorm = 0.0
    try:
        for j in range(q):
            vnorm += v[j] * v[j]
        if vnorm == 0.0:
            raise ValueError("initial v must be nonzero")
        vnorm = sqrt(vnorm)
        for j in range(q):
            v[j] /= vnorm
        for it in range(max_iter):
            for i in range(p):
                acc = 0.0
                for j in range(q):
                    acc += zm[i, j] * v[j]
                zv[i] = acc
            _l1_unit_project(zv, u_new, p, c1)
            for j in range(q):
                acc = 0.0
                for i in range(p):
                    acc += zm[i, j] * u_new[i]
                w[j] = acc
            _l1_unit_project(w, v_new, q, c2)
            acc = 0.0
            for j in range(q):
                acc += w[j] * v_new[j]
            obj[it] = acc
            step = 0.0
            for i in range(p):
                d = fabs(u_new[i] - u[i])
                if d > step:
                    step = d
                u[i] = u_new[i]
            for j in range(q):
                d = fabs(v_new[j] - v[j])
                if d > step:
                    step = d
                v[j] = v_new[j]
            n_iter = it + 1
            if step < tol:
                converged = True
                break
    finally:
        free(zv); free(w); free(u_new); free(v_new)
    return u_arr, v_arr, n_iter, converged, obj_arr[:n_iter].copy()
