"""Principal problem  u''' - A^3 u = f,  u(0) = 0,  u'(0) = K u  on R+.

The solution is assembled as ``q + exp(w1 A t) x1 + exp(w2 A t) x2`` where
``q`` is a particular solution on [0, T] (an exactly solved exponential
piece carrying f(0) plus the whole-line solution of the zero-extended
remainder, computed with a padded FFT), and ``x1`` solves the fixed point
``x1 = psi + Phi x1`` by Neumann iteration.
"""
import threading
from dataclasses import dataclass

import numpy as np

from .boundary import BoundaryOperator, apply_K
from .errors import BoundaryConditionViolated, ContractionFailure, ResidualExceeded
from .function_space import GridFunction, W23Element, l2_norm_values, w23_norm
from .spectral import OMEGA1, OMEGA2, h_gamma_norm

SQRT3 = np.sqrt(3.0)
IMAG_TOL = 1e-8

assert abs(OMEGA1 ** 3 - 1) < 1e-14 and abs(OMEGA2 ** 3 - 1) < 1e-14
assert OMEGA2 == OMEGA1.conjugate()


@dataclass(frozen=True, eq=False)
class PrincipalProblem:
    A: object
    K: BoundaryOperator
    f: GridFunction
    grid: object = None
    tol: float = 1e-6

    def __post_init__(self):
        if self.grid is None:
            object.__setattr__(self, "grid", self.f.grid)


class _Transform:
    """Padded FFT plan: frequencies and the Nyquist-symmetrized multipliers."""

    def __init__(self, A, grid):
        self.A = A
        self.grid = grid
        self.M = 2 * grid.pad_factor * grid.N
        xi = 2.0 * np.pi * np.fft.fftfreq(self.M, d=grid.dt)
        lam3 = A.eigenvalues ** 3
        mult = []
        for p in range(4):
            m = (1j * xi[:, None]) ** p / (-1j * xi[:, None] ** 3 - lam3)
            # the Nyquist bin stands for +xi and -xi; average keeps real data real
            nyq = self.M // 2
            xn = -xi[nyq]
            m[nyq] = 0.5 * (m[nyq] + (1j * xn) ** p / (-1j * xn ** 3 - lam3))
            mult.append(m)
        self.multipliers = mult
        self.xi = xi
        # rate of the exactly solved jump piece, decayed to e^-30 at T; kept
        # off the default 40/T so that it does not coincide with typical data
        self.rate = 30.0 / grid.T

    def solve(self, f_values):
        """Samples of q, q', q'', q''' on [0, T] for right-hand side samples.

        The jump of the zero extension at t = 0 is removed first: the piece
        f(0) exp(-c t) has the exact particular solution
        exp(-c t) (-c^3 - A^3)^{-1} f(0), and only the remainder, which
        vanishes at t = 0, goes through the transform.
        """
        N = self.grid.N
        V = self.A.eigenvectors
        fe = f_values @ V
        f0 = fe[0]
        decay = np.exp(-self.rate * self.grid.times)
        padded = np.zeros((self.M, self.A.dim), dtype=np.complex128)
        padded[:N] = fe - np.multiply.outer(decay, f0)
        spec = np.fft.fft(padded, axis=0)
        coef = f0 / (-self.rate ** 3 - self.A.eigenvalues ** 3)
        out = []
        for p, m in enumerate(self.multipliers):
            part = np.fft.ifft(m * spec, axis=0)[:N]
            part += np.multiply.outer((-self.rate) ** p * decay, coef)
            out.append(part @ V.T)
        return out


def particular_solution(A, f, transform=None):
    """Particular solution q of q''' - A^3 q = f on [0, T] with exact derivatives."""
    transform = transform or _Transform(A, f.grid)
    q, d1, d2, d3 = (f.with_values(v) for v in transform.solve(f.values))
    return W23Element.from_derivatives(A, q, d1, d2, d3)


def homogeneous(A, grid, omega, x, E=None):
    """W23Element for exp(omega A t) x, with exact derivatives."""
    c = A.to_eigen(np.asarray(x, dtype=np.complex128))
    if E is None:
        E = np.exp(omega * np.multiply.outer(grid.times, A.eigenvalues))
    lam = omega * A.eigenvalues
    V = A.eigenvectors
    parts = [GridFunction(grid, (E * (c * lam ** k)) @ V.T) for k in range(4)]
    return W23Element(*parts, GridFunction(grid, (E * (c * lam ** 3)) @ V.T))


class PhiContext:
    """Cached data for Phi x = (i sqrt 3)^{-1} A^{-1} K (exp(w1 A t) - exp(w2 A t)) x."""

    def __init__(self, A, K, grid):
        self.A = A
        self.K = K
        self.grid = grid
        lt = np.multiply.outer(grid.times, A.eigenvalues)
        self.E1 = np.exp(OMEGA1 * lt)
        self.E2 = np.exp(OMEGA2 * lt)
        self.Ainv = A.power_matrix(-1.0)

    def difference(self, x):
        """(exp(w1 A t) - exp(w2 A t)) x = 2i exp(-At/2) sin(sqrt3 A t/2) x as a W23Element."""
        g1 = homogeneous(self.A, self.grid, OMEGA1, x, self.E1)
        g2 = homogeneous(self.A, self.grid, OMEGA2, x, self.E2)
        return g1.combine(g2, 1.0, -1.0)

    def apply(self, x):
        if self.K.is_zero:
            return np.zeros(self.A.dim, dtype=np.complex128)
        return self.Ainv @ apply_K(self.K, self.difference(x)) / (1j * SQRT3)

    def norm(self, x):
        return h_gamma_norm(self.A, 2.5, x)


def phi_apply(ctx, x):
    return ctx.apply(x)


def solve_phi_fixed_point(ctx, psi, tol=1e-12, maxiter=10_000, monotone_after=50):
    """Neumann iteration x <- psi + Phi x.

    Returns ``(x, iterations)``. The step norm is measured in H_{5/2}, where
    Phi is a contraction whenever ||K|| < 1, so it must decrease monotonically.
    """
    psi = np.asarray(psi, dtype=np.complex128)
    target = tol * ctx.norm(psi)
    x = psi.copy()
    if target == 0.0:
        return x, 0
    prev = np.inf
    for it in range(1, maxiter + 1):
        new = psi + ctx.apply(x)
        step = ctx.norm(new - x)
        x = new
        if step <= target:
            return x, it
        if it > monotone_after and step > prev:
            raise ContractionFailure(f"step norm grew from {prev:.3e} to {step:.3e} "
                                     f"at iteration {it}; kappa estimate too small?")
        prev = step
    raise ContractionFailure(f"no convergence in {maxiter} iterations (step {prev:.3e})")


@dataclass
class PrincipalInfo:
    residual: float = 0.0
    f_norm: float = 0.0
    bc0: float = 0.0
    bc1: float = 0.0
    w23: float = 0.0
    phi_iterations: int = 0
    max_imag: float = 0.0


class PrincipalSolver:
    """Solver for P0 u = f with cached FFT multipliers and Phi context.

    ``solve`` raises :class:`ResidualExceeded` or
    :class:`BoundaryConditionViolated` when the achieved accuracy misses ``tol``.
    Diagnostics of the last solve are in ``info``, kept per thread so that
    one solver can serve concurrent solves.
    """

    def __init__(self, A, K, grid, tol=1e-6):
        self.A = A
        self.K = K
        self.grid = grid
        self.tol = tol
        K.check_grid(grid)
        self.transform = _Transform(A, grid)
        self.phi = PhiContext(A, K, grid)
        self.Ainv = self.phi.Ainv
        self._local = threading.local()

    @property
    def info(self):
        return getattr(self._local, "info", None) or PrincipalInfo()

    @info.setter
    def info(self, value):
        self._local.info = value

    def solve(self, f, check=True, keep_complex=False):
        A, K = self.A, self.K
        q = particular_solution(A, f, self.transform)
        q0 = q.u.values[0]
        q1 = q.d1.values[0]
        Kq = np.zeros(A.dim, dtype=np.complex128)
        if not K.is_zero:
            Kq = Kq + apply_K(K, q)
            if np.any(q0):
                Kq -= apply_K(K, homogeneous(A, self.grid, OMEGA2, q0, self.phi.E2))
        psi = (OMEGA2 * q0 - self.Ainv @ q1 + self.Ainv @ Kq) / (1j * SQRT3)
        x1, iters = solve_phi_fixed_point(self.phi, psi)
        x2 = -q0 - x1
        u = q.combine(homogeneous(A, self.grid, OMEGA1, x1, self.phi.E1))
        u = u.combine(homogeneous(A, self.grid, OMEGA2, x2, self.phi.E2))
        info = self._diagnostics(u, f)
        info.phi_iterations = iters
        self.info = info
        real_data = not np.iscomplexobj(f.values)
        if real_data and not keep_complex:
            if info.max_imag > IMAG_TOL * max(1.0, np.abs(u.u.values).max()):
                raise ResidualExceeded("solution has a non-negligible imaginary part",
                                       max_imag=info.max_imag)
            u = u.real
        if check:
            self._check(info)
        return u

    def _diagnostics(self, u, f):
        A, K = self.A, self.K
        res = u.d3.values - u.A3u.values - f.values
        info = PrincipalInfo()
        info.residual = l2_norm_values(res, f.grid.dt)
        info.f_norm = l2_norm_values(f.values, f.grid.dt)
        info.w23 = w23_norm(u, warn=False)
        info.bc0 = h_gamma_norm(A, 2.5, u.u.values[0])
        Ku = apply_K(K, u) if not K.is_zero else 0.0
        info.bc1 = h_gamma_norm(A, 1.5, u.d1.values[0] - Ku)
        info.max_imag = u.max_imag
        return info

    def _check(self, info):
        tol = self.tol
        if info.residual > tol * info.f_norm:
            raise ResidualExceeded(f"residual {info.residual:.3e} exceeds {tol:.1e}*||f||",
                                   residual=info.residual, f_norm=info.f_norm)
        scale = max(1.0, info.w23)
        if info.bc0 > tol * scale or info.bc1 > tol * scale:
            raise BoundaryConditionViolated(
                f"boundary residuals u(0): {info.bc0:.3e}, u'(0)-Ku: {info.bc1:.3e}",
                bc0=info.bc0, bc1=info.bc1)


def solve_principal(p):
    """Solve a :class:`PrincipalProblem`; returns a real W23Element for real data."""
    return PrincipalSolver(p.A, p.K, p.grid, p.tol).solve(p.f)


def p0_apply(u):
    """P0 u = u''' - A^3 u as a grid function."""
    return u.d3.with_values(u.d3.values - u.A3u.values)
