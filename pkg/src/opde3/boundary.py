"""Boundary perturbation operators K u = sum_m C_m u^(d_m)(t_m) and their norm.

The operator norm from W_2^3(R+; H; A) into H_{3/2} is computed from the
reproducing kernel of W_2^3 on the half-line. For a scalar spectral value
``lam`` the norm ``int |u'''|^2 + lam^6 |u|^2`` rescales to ``lam = 1`` via
t -> lam t, so only the unit kernel has to be built. Its representers are
piecewise exponentials in the sixth roots of unity, fixed by a 9x9 linear
system (natural boundary conditions at 0, jump conditions at the
evaluation point).
"""
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from .errors import EvaluationOutsideGrid
from .function_space import sample_at
from .spectral import power_iteration

SAFETY = 0.05

_ROOTS = np.exp(1j * np.pi * np.arange(6) / 3.0)
_DECAYING = _ROOTS[_ROOTS.real < 0]
_GROWING = _ROOTS.real > 0


@dataclass(frozen=True, eq=False)
class Term:
    c: np.ndarray
    d: int
    t: float

    def __post_init__(self):
        object.__setattr__(self, "c", np.atleast_2d(np.asarray(self.c, dtype=np.float64)))
        if self.d not in (0, 1, 2):
            raise ValueError(f"derivative order must be 0, 1 or 2, got {self.d}")
        if not (self.t >= 0.0 and np.isfinite(self.t)):
            raise ValueError(f"evaluation time must be >= 0, got {self.t}")


@dataclass(frozen=True, eq=False)
class BoundaryOperator:
    terms: tuple = ()
    kappa_cert: float = None

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(
            t if isinstance(t, Term) else Term(*t) for t in self.terms))

    @classmethod
    def from_config(cls, entries, kappa_cert=None):
        """Build from ``[{c: matrix, d: int, t: real}, ...]``."""
        return cls(tuple(Term(e["c"], int(e["d"]), float(e["t"])) for e in entries or ()),
                   kappa_cert)

    def to_config(self):
        return [{"c": t.c.tolist(), "d": t.d, "t": t.t} for t in self.terms]

    def scaled(self, s):
        return replace(self, terms=tuple(Term(s * t.c, t.d, t.t) for t in self.terms))

    @property
    def is_zero(self):
        return not any(np.any(t.c) for t in self.terms)

    def check_grid(self, grid):
        for term in self.terms:
            if term.t > grid.T:
                raise EvaluationOutsideGrid(f"term evaluates at t={term.t} > T={grid.T}")


def apply_K(K, u):
    """K u for a W23Element ``u``; samples off the grid are interpolated."""
    n = u.u.dim
    dtype = np.result_type(u.u.values, np.float64)
    out = np.zeros(n, dtype=dtype)
    K.check_grid(u.grid)
    for term in K.terms:
        out = out + term.c @ sample_at(u.derivative(term.d), term.t)
    return out


def apply_K_callable(K, derivs):
    """K u where ``derivs(order, t)`` returns u^(order)(t) exactly."""
    out = 0.0
    for term in K.terms:
        out = out + term.c @ derivs(term.d, term.t)
    return out


@lru_cache(maxsize=4096)
def _representer(d, s):
    """Coefficients of the unit-kernel representer of u -> u^(d)(s).

    Left of ``s`` the representer is sum_k a_k phi_k(t) with phi_k = exp(r_k t)
    for decaying roots and exp(r_k (t - s)) for growing ones; right of ``s``
    it is sum_j b_j exp(r_j (t - s)) over decaying roots.
    """
    shift = np.where(_GROWING, s, 0.0)
    mat = np.zeros((9, 9), dtype=np.complex128)
    rhs = np.zeros(9, dtype=np.complex128)
    at0 = np.exp(-_ROOTS * shift)
    at_s = np.exp(_ROOTS * (s - shift))
    for row, k in enumerate((3, 4, 5)):
        mat[row, :6] = _ROOTS ** k * at0
    for k in range(6):
        mat[3 + k, :6] = -(_ROOTS ** k) * at_s
        mat[3 + k, 6:] = _DECAYING ** k
        if k == 5 - d:
            rhs[3 + k] = (-1.0) ** (d + 1)
    coef = np.linalg.solve(mat, rhs)
    return coef[:6], coef[6:], shift


def unit_kernel(d, s, dp, sp):
    """<R_{d,s}, R_{dp,sp}> for the norm int |u'''|^2 + |u|^2 on (0, inf)."""
    a, b, shift = _representer(int(d), float(s))
    if sp < s:
        return float(np.real(np.sum(a * _ROOTS ** dp * np.exp(_ROOTS * (sp - shift)))))
    return float(np.real(np.sum(b * _DECAYING ** dp * np.exp(_DECAYING * (sp - s)))))


def kernel_gram(K, A):
    """n x n matrix (A^{3/2} K)(A^{3/2} K)^*; its top eigenvalue is kappa^2."""
    n = A.dim
    terms = K.terms
    gram = np.zeros((n, n))
    if not terms:
        return gram
    a32 = A.power_matrix(1.5)
    for lam, v in zip(A.eigenvalues, A.eigenvectors.T):
        S = np.empty((len(terms), len(terms)))
        for i, ti in enumerate(terms):
            for j, tj in enumerate(terms):
                if j < i:
                    S[i, j] = S[j, i]
                    continue
                S[i, j] = lam ** (ti.d + tj.d - 5) * unit_kernel(ti.d, lam * ti.t, tj.d, lam * tj.t)
        W = np.column_stack([a32 @ (t.c @ v) for t in terms])
        gram += W @ S @ W.T
    return 0.5 * (gram + gram.T)


def raw_kappa(K, A):
    """Operator norm of K from W_2^3 into H_{3/2} (no safety factor)."""
    if K.is_zero:
        return 0.0
    gram = kernel_gram(K, A)
    value, _, _ = power_iteration(lambda x: gram @ x, A.dim)
    return float(np.sqrt(max(value, 0.0)))


def estimate_kappa(K, A, grid=None):
    """Estimate of ||K||; with ``K.kappa_cert`` returns min(estimate*(1+0.05), cert)."""
    if grid is not None:
        K.check_grid(grid)
    est = raw_kappa(K, A)
    if K.kappa_cert is not None:
        return min(est * (1.0 + SAFETY), float(K.kappa_cert))
    return est


def extremal_direction(K, A):
    """Unit y in H maximizing ||(A^{3/2}K)^* y||; used to build worst-case witnesses."""
    gram = kernel_gram(K, A)
    _, y, _ = power_iteration(lambda x: gram @ x, A.dim)
    return y
