# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; same signatures as ``_pykernels``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, copysign

cnp.import_array()


def jacobi_eigh(a, double tol=1e-15, int max_sweeps=100):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] m = np.array(a, dtype=np.float64, copy=True)
    cdef Py_ssize_t n = m.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] v = np.eye(n)
    cdef double[:, ::1] A = m
    cdef double[:, ::1] V = v
    cdef Py_ssize_t p, q, k
    cdef int sweep
    cdef double apq, theta, t, c, s, x, y, off, total, scale
    total = 0.0
    for p in range(n):
        for q in range(n):
            total += A[p, q] * A[p, q]
    scale = sqrt(total)
    if scale == 0.0:
        return np.zeros(n), v
    for sweep in range(max_sweeps):
        off = 0.0
        for p in range(n):
            for q in range(n):
                if p != q:
                    off += A[p, q] * A[p, q]
        if sqrt(off) <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if fabs(apq) <= 1e-300 * scale:
                    A[p, q] = 0.0
                    A[q, p] = 0.0
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                if fabs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = copysign(1.0, theta) / (fabs(theta) + sqrt(theta * theta + 1.0))
                c = 1.0 / sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    x = A[k, p]
                    y = A[k, q]
                    A[k, p] = c * x - s * y
                    A[k, q] = s * x + c * y
                for k in range(n):
                    x = A[p, k]
                    y = A[q, k]
                    A[p, k] = c * x - s * y
                    A[q, k] = s * x + c * y
                A[p, q] = 0.0
                A[q, p] = 0.0
                for k in range(n):
                    x = V[k, p]
                    y = V[k, q]
                    V[k, p] = c * x - s * y
                    V[k, q] = s * x + c * y
    w = np.diag(m).copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def stencil_apply(values, center, edge, double sign, double dt_power):
    cdef double[:, ::1] f = np.ascontiguousarray(values, dtype=np.float64)
    cdef double[::1] cw = np.ascontiguousarray(center, dtype=np.float64)
    cdef double[:, ::1] ew = np.ascontiguousarray(edge, dtype=np.float64)
    cdef Py_ssize_t n_pts = f.shape[0], m = f.shape[1]
    cdef Py_ssize_t h = (cw.shape[0] - 1) // 2
    cdef Py_ssize_t nb = ew.shape[0], width = ew.shape[1]
    out_arr = np.zeros((n_pts, m), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, c, k
    cdef double acc, inv = 1.0 / dt_power
    for i in range(nb, n_pts - nb):
        for c in range(m):
            acc = 0.0
            for k in range(2 * h + 1):
                acc += cw[k] * f[i + k - h, c]
            out[i, c] = acc * inv
    for j in range(nb):
        for c in range(m):
            acc = 0.0
            for k in range(width):
                acc += ew[j, k] * f[k, c]
            out[j, c] = acc * inv
            acc = 0.0
            for k in range(width):
                acc += ew[j, k] * f[n_pts - 1 - k, c]
            out[n_pts - 1 - j, c] = sign * acc * inv
    return out_arr


def trapezoid_sq(values, double dt):
    cdef double[:, ::1] f = np.ascontiguousarray(values, dtype=np.float64)
    cdef Py_ssize_t n_pts = f.shape[0], m = f.shape[1]
    cdef Py_ssize_t i, c
    cdef double row, total = 0.0, ends = 0.0
    for i in range(n_pts):
        row = 0.0
        for c in range(m):
            row += f[i, c] * f[i, c]
        if i == 0 or i == n_pts - 1:
            ends += row
        total += row
    return dt * (total - 0.5 * ends)


def trapezoid_dot(a, b, double dt):
    cdef double[:, ::1] f = np.ascontiguousarray(a, dtype=np.float64)
    cdef double[:, ::1] g = np.ascontiguousarray(b, dtype=np.float64)
    cdef Py_ssize_t n_pts = f.shape[0], m = f.shape[1]
    cdef Py_ssize_t i, c
    cdef double row, total = 0.0, ends = 0.0
    for i in range(n_pts):
        row = 0.0
        for c in range(m):
            row += f[i, c] * g[i, c]
        if i == 0 or i == n_pts - 1:
            ends += row
        total += row
    return dt * (total - 0.5 * ends)
