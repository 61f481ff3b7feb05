"""Spectral calculus for a symmetric positive-definite operator on R^n.

Everything is computed in the cached eigenbasis: fractional powers, complex
exponentials ``exp(omega*A*t)`` and the damped-sine kernel
``exp(-alpha*A*t) * sin(beta*A*t)``.
"""
from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .errors import GrowthRejected, NotPositiveDefinite, NotSymmetric

OMEGA1 = complex(-0.5, np.sqrt(3.0) / 2.0)
OMEGA2 = OMEGA1.conjugate()

_SYM_RTOL = 1e-12
_RECON_RTOL = 1e-10


@dataclass(frozen=True, eq=False)
class Operator:
    """Symmetric positive-definite matrix with its eigendecomposition.

    Attributes
    ----------
    matrix : (n, n) ndarray
    eigenvalues : (n,) ndarray, ascending
    eigenvectors : (n, n) ndarray, orthonormal columns
    """

    matrix: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self):
        return self.matrix.shape[0]

    @property
    def mu0(self):
        """Lower spectral bound: A >= mu0 * E."""
        return float(self.eigenvalues[0])

    def to_eigen(self, x):
        return self.eigenvectors.T @ x

    def from_eigen(self, c):
        return self.eigenvectors @ c

    def function(self, values):
        """Matrix for the spectral function with per-eigenvalue ``values``."""
        v = self.eigenvectors
        return (v * values) @ v.T

    def power_matrix(self, gamma):
        return self.function(self.eigenvalues ** float(gamma))


def make_operator(matrix):
    """Validate ``matrix`` and build an :class:`Operator`.

    Raises
    ------
    NotSymmetric
        If ``matrix`` is not symmetric to 1e-12 relative.
    NotPositiveDefinite
        If any eigenvalue is <= 0.
    """
    m = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise NotSymmetric(f"expected a non-empty square matrix, got shape {m.shape}")
    norm = np.linalg.norm(m)
    if norm == 0.0:
        raise NotPositiveDefinite("zero matrix")
    if np.linalg.norm(m - m.T) > _SYM_RTOL * norm:
        raise NotSymmetric("matrix is not symmetric")
    m = 0.5 * (m + m.T)
    w, v = kernels.jacobi_eigh(m)
    if w[0] <= 0.0:
        raise NotPositiveDefinite(f"smallest eigenvalue {w[0]:.3e} is not positive")
    if np.linalg.norm((v * w) @ v.T - m) > _RECON_RTOL * norm:
        raise RuntimeError("eigendecomposition failed the reconstruction check")
    w.setflags(write=False)
    v.setflags(write=False)
    m.setflags(write=False)
    return Operator(m, w, v)


def check_gamma(gamma):
    gamma = float(gamma)
    if not np.isfinite(gamma) or gamma < 0.0:
        raise ValueError(f"scale index must be finite and >= 0, got {gamma}")
    return gamma


def apply_power(A, gamma, x):
    """A**gamma @ x, through the eigenbasis. ``x`` may be (n,) or (..., n)."""
    gamma = check_gamma(gamma)
    x = np.asarray(x)
    if gamma == 0.0:
        return x.copy()
    return _spectral_apply(A, A.eigenvalues ** gamma, x)


def h_gamma_norm(A, gamma, x):
    """Norm of ``x`` in the scale space H_gamma, i.e. ||A**gamma x||."""
    return float(np.linalg.norm(apply_power(A, gamma, x)))


def apply_complex_exp(A, omega, t, x):
    """exp(omega*A*t) @ x for t >= 0 (scalar or 1-D array of times).

    For an array of times the result has shape (len(t), n).
    """
    omega = complex(omega)
    if omega.real > 0.0:
        raise GrowthRejected(f"Re(omega) = {omega.real} > 0 gives a growing exponential")
    t = np.asarray(t, dtype=np.float64)
    c = A.to_eigen(np.asarray(x, dtype=np.complex128))
    factor = np.exp(omega * np.multiply.outer(t, A.eigenvalues))
    return (factor * c) @ A.eigenvectors.T


def exp_derivatives(A, omega, t, x, orders=(0, 1, 2, 3)):
    """Samples of d^k/dt^k exp(omega*A*t) x = (omega*A)^k exp(omega*A*t) x."""
    t = np.asarray(t, dtype=np.float64)
    c = A.to_eigen(np.asarray(x, dtype=np.complex128))
    base = np.exp(omega * np.multiply.outer(t, A.eigenvalues)) * c
    lam = omega * A.eigenvalues
    return [(base * lam ** k) @ A.eigenvectors.T for k in orders]


def damped_sine_kernel(A, alpha, beta, t, x):
    """exp(-alpha*A*t) sin(beta*A*t) x, multiplied per eigencoordinate."""
    if alpha <= 0.0:
        raise ValueError("alpha must be positive")
    t = np.asarray(t, dtype=np.float64)
    c = A.to_eigen(np.asarray(x))
    lt = np.multiply.outer(t, A.eigenvalues)
    factor = np.exp(-alpha * lt) * np.sin(beta * lt)
    return (factor * c) @ A.eigenvectors.T


def _spectral_apply(A, values, x):
    c = x @ A.eigenvectors
    return (c * values) @ A.eigenvectors.T


def power_iteration(matvec, n, tol=1e-14, maxiter=10_000, seed=0):
    """Largest eigenvalue of a symmetric positive semi-definite map on R^n.

    Returns ``(value, vector, iterations)``. Convergence is declared when the
    Rayleigh quotient changes by less than ``tol`` relative. Raises
    :class:`~opde3.errors.PowerIterationDiverged` otherwise.
    """
    from .errors import PowerIterationDiverged

    x = np.random.default_rng(seed).standard_normal(n) + 1.0
    x /= np.linalg.norm(x)
    rq = 0.0
    for it in range(1, maxiter + 1):
        y = matvec(x)
        new_rq = float(x @ y)
        ny = np.linalg.norm(y)
        if ny == 0.0:
            return 0.0, x, it
        x = y / ny
        if abs(new_rq - rq) <= tol * abs(new_rq):
            return new_rq, x, it
        rq = new_rq
    raise PowerIterationDiverged(f"no convergence in {maxiter} iterations (last {rq:.6e})")


def spectral_norm(B, tol=1e-14, maxiter=10_000):
    """Largest singular value of ``B`` via power iteration on B^T B."""
    B = np.atleast_2d(np.asarray(B, dtype=np.float64))
    if not np.any(B):
        return 0.0
    value, _, _ = power_iteration(lambda x: B.T @ (B @ x), B.shape[1], tol, maxiter)
    return float(np.sqrt(max(value, 0.0)))
