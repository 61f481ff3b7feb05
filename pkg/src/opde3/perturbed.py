"""Full problem  u''' - A^3 u + B1 A u'' + B2 A^2 u' + B3 A^3 u = f  with u(0)=0, u'(0)=Ku.

Rewritten as ``v + P1 P0^{-1} v = f`` with ``v = P0 u`` and solved by the
Neumann iteration ``v <- f - P1 P0^{-1} v`` starting from ``v = f``.
"""
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .boundary import BoundaryOperator
from .errors import IterationCapExceeded, NotContracting, ResidualExceeded
from .function_space import DecayWarning, GridFunction, l2_norm_values
from .principal import PrincipalSolver
from .spectral import spectral_norm


@dataclass(frozen=True, eq=False)
class Perturbation:
    B1: np.ndarray
    B2: np.ndarray
    B3: np.ndarray

    @classmethod
    def zero(cls, n):
        z = np.zeros((n, n))
        return cls(z, z, z)

    @classmethod
    def from_matrices(cls, n, B1=None, B2=None, B3=None):
        conv = lambda B: np.zeros((n, n)) if B is None else np.atleast_2d(np.asarray(B, float))
        mats = [conv(B) for B in (B1, B2, B3)]
        for B in mats:
            if B.shape != (n, n):
                raise ValueError(f"perturbation matrix has shape {B.shape}, expected {(n, n)}")
        return cls(*mats)

    @property
    def is_zero(self):
        return not (np.any(self.B1) or np.any(self.B2) or np.any(self.B3))

    def norms(self):
        """Spectral norms (||B1||, ||B2||, ||B3||)."""
        return tuple(spectral_norm(B) for B in (self.B1, self.B2, self.B3))

    def coefficients(self, A):
        """A_j = B_j A^j for j = 1, 2, 3."""
        return (self.B1 @ A.matrix, self.B2 @ A.power_matrix(2), self.B3 @ A.power_matrix(3))


def apply_P1(p, A, u):
    """A1 u'' + A2 u' + A3 u on the grid."""
    A1, A2, A3 = p.coefficients(A)
    vals = u.d2.values @ A1.T + u.d1.values @ A2.T + u.u.values @ A3.T
    return u.u.with_values(vals)


@dataclass(frozen=True, eq=False)
class FullProblem:
    A: object
    K: BoundaryOperator
    perturbation: Perturbation
    f: GridFunction
    grid: object = None
    tol: float = 1e-6
    max_iter: int = 500

    def __post_init__(self):
        if self.grid is None:
            object.__setattr__(self, "grid", self.f.grid)


@dataclass
class IterationStats:
    iterations: int = 0
    final_residual: float = 0.0
    f_norm: float = 0.0
    contraction_ratios: list = field(default_factory=list)
    steps: list = field(default_factory=list)
    bc0: float = 0.0
    bc1: float = 0.0
    tail: float = 0.0

    @property
    def max_ratio(self):
        return max(self.contraction_ratios, default=0.0)

    def to_dict(self):
        return asdict(self)


def solve_full(p, principal=None, check=True):
    """Solve a :class:`FullProblem`. Returns ``(u, stats)``.

    ``principal`` may pass a prebuilt :class:`PrincipalSolver` to reuse its
    cached transform and Phi context.
    """
    A, f = p.A, p.f
    dt = p.grid.dt
    solver = principal or PrincipalSolver(A, p.K, p.grid, p.tol)
    stats = IterationStats()
    f_norm = l2_norm_values(f.values, dt)
    stats.f_norm = f_norm
    v = f
    u = solver.solve(v, check=False)
    if p.perturbation.is_zero or f_norm == 0.0:
        return _finish(p, solver, u, stats, check)
    prev = None
    above = 0
    for k in range(1, p.max_iter + 1):
        v_new = f - apply_P1(p.perturbation, A, u)
        step = l2_norm_values(v_new.values - v.values, dt)
        stats.steps.append(step)
        stats.iterations = k
        if prev is not None and prev > 0.0:
            ratio = step / prev
            stats.contraction_ratios.append(ratio)
            above = above + 1 if ratio >= 1.0 else 0
            if above >= 5:
                raise NotContracting(f"contraction ratio >= 1 for 5 steps (last {ratio:.3f})",
                                     ratios=list(stats.contraction_ratios))
        prev = step
        v = v_new
        u = solver.solve(v, check=False)
        if step <= p.tol * f_norm:
            return _finish(p, solver, u, stats, check)
    raise IterationCapExceeded(f"no convergence in {p.max_iter} iterations",
                               iterations=p.max_iter, last_step=prev)


def full_residual(p, u):
    """||u''' - A^3 u + P1 u - f||_{L2}."""
    res = u.d3.values - u.A3u.values + apply_P1(p.perturbation, p.A, u).values - p.f.values
    return l2_norm_values(res, p.grid.dt)


def _finish(p, solver, u, stats, check):
    stats.final_residual = full_residual(p, u)
    stats.bc0 = solver.info.bc0
    stats.bc1 = solver.info.bc1
    # lower-order terms can slow the decay well below the unperturbed rate
    norms = np.linalg.norm(u.u.values, axis=1)
    stats.tail = float(norms[-1] / norms.max()) if norms.max() > 0 else 0.0
    if stats.tail > u.u.tail_tol:
        warnings.warn(f"solution has only decayed to {stats.tail:.1e} of its peak at T; "
                      "enlarge the grid", DecayWarning, stacklevel=3)
    if check:
        limit = 10.0 * p.tol * stats.f_norm
        if stats.final_residual > limit:
            raise ResidualExceeded(f"full residual {stats.final_residual:.3e} > {limit:.3e}",
                                   residual=stats.final_residual, f_norm=stats.f_norm)
        solver._check(solver.info)
    return u, stats
