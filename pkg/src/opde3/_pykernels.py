"""Pure-numpy implementations of the hot kernels.

Used when the compiled ``_ckernels`` extension is unavailable, and as the
reference the compiled path is benchmarked and tested against.
"""
import numpy as np


def jacobi_eigh(a, tol=1e-15, max_sweeps=100):
    """Cyclic Jacobi eigendecomposition of a real symmetric matrix.

    Returns eigenvalues in ascending order and the matching orthonormal
    eigenvectors as columns.
    """
    a = np.array(a, dtype=np.float64, copy=True)
    n = a.shape[0]
    v = np.eye(n)
    scale = np.sqrt(np.sum(a * a))
    if scale == 0.0:
        return np.zeros(n), v
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum((a - np.diag(np.diag(a))) ** 2))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-300 * scale:
                    a[p, q] = 0.0
                    a[q, p] = 0.0
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = np.copysign(1.0, theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                a[p, q] = 0.0
                a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    w = np.diag(a).copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def stencil_apply(values, center, edge, sign, dt_power):
    """Apply a finite-difference stencil along axis 0.

    ``center`` (odd length) is used at interior rows. ``edge`` holds one row
    of weights per boundary point, applied to the leading samples on the
    left and, mirrored and multiplied by ``sign``, to the trailing samples
    on the right.
    """
    values = np.asarray(values, dtype=np.float64)
    n_pts = values.shape[0]
    h = (len(center) - 1) // 2
    nb, width = edge.shape
    out = np.zeros_like(values)
    for k, wk in enumerate(center):
        off = k - h
        out[nb:n_pts - nb] += wk * values[nb + off:n_pts - nb + off]
    head = values[:width]
    tail = values[::-1][:width]
    for j in range(nb):
        out[j] = edge[j] @ head
        out[n_pts - 1 - j] = sign * (edge[j] @ tail)
    return out / dt_power


def trapezoid_sq(values, dt):
    """Trapezoid rule for the integral of the squared row norms."""
    values = np.asarray(values, dtype=np.float64)
    sq = np.einsum("ij,ij->i", values, values)
    return dt * (sq.sum() - 0.5 * (sq[0] + sq[-1]))


def trapezoid_dot(a, b, dt):
    """Trapezoid rule for the integral of row-wise dot products."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    prod = np.einsum("ij,ij->i", a, b)
    return dt * (prod.sum() - 0.5 * (prod[0] + prod[-1]))
