"""Random instances and exactly differentiable right-hand sides."""
from dataclasses import dataclass
from math import comb

import numpy as np

from .boundary import BoundaryOperator, Term, raw_kappa
from .function_space import GridFunction
from .spectral import make_operator


@dataclass(frozen=True, eq=False)
class ExpPoly:
    """f(t) = sum_m v_m t^{p_m} exp(-r_m t), with r_m > 0 and integer p_m >= 0."""

    vectors: np.ndarray
    rates: np.ndarray
    powers: np.ndarray

    def __post_init__(self):
        v = np.atleast_2d(np.asarray(self.vectors, dtype=np.float64))
        r = np.atleast_1d(np.asarray(self.rates, dtype=np.float64))
        p = np.atleast_1d(np.asarray(self.powers, dtype=np.int64))
        if not (len(v) == len(r) == len(p)):
            raise ValueError("vectors, rates and powers must have equal length")
        if np.any(r <= 0):
            raise ValueError("rates must be positive")
        if np.any(p < 0):
            raise ValueError("powers must be >= 0")
        object.__setattr__(self, "vectors", v)
        object.__setattr__(self, "rates", r)
        object.__setattr__(self, "powers", p)

    @classmethod
    def from_config(cls, terms):
        return cls([t["coeff_vector"] for t in terms], [t["rate"] for t in terms],
                   [t["power"] for t in terms])

    @property
    def dim(self):
        return self.vectors.shape[1]

    def derivative(self, order, t):
        """Exact order-th derivative at times ``t``; shape (len(t), n)."""
        t = np.atleast_1d(np.asarray(t, dtype=np.float64))
        out = np.zeros((len(t), self.dim))
        for v, r, p in zip(self.vectors, self.rates, self.powers):
            # Leibniz rule for t^p * exp(-r t)
            s = np.zeros_like(t)
            for k in range(min(order, p) + 1):
                falling = np.prod(np.arange(p - k + 1, p + 1)) if k else 1.0
                s += comb(order, k) * falling * t ** (p - k) * (-r) ** (order - k)
            out += np.multiply.outer(s * np.exp(-r * t), v)
        return out

    def __call__(self, t):
        return self.derivative(0, t)

    def sample(self, grid):
        return GridFunction.from_real(grid, self(grid.times))


def random_operator(rng, n, lo=0.5, hi=2.5):
    """Random SPD matrix with eigenvalues uniform in [lo, hi]."""
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    lam = rng.uniform(lo, hi, n)
    if n > 1:
        lam[0], lam[-1] = lo, hi
    m = (q * lam) @ q.T
    return make_operator(0.5 * (m + m.T))


def random_boundary(rng, A, kappa, n_terms=None, t_max=None):
    """Random point-evaluation K rescaled so that its norm equals ``kappa``."""
    if kappa == 0.0:
        return BoundaryOperator()
    n = A.dim
    n_terms = n_terms or int(rng.integers(1, 4))
    t_max = 2.0 / A.mu0 if t_max is None else t_max
    terms = [Term(rng.standard_normal((n, n)), int(rng.integers(0, 3)),
                  float(rng.uniform(0.0, t_max) if rng.random() < 0.7 else 0.0))
             for _ in range(n_terms)]
    K = BoundaryOperator(tuple(terms))
    return K.scaled(kappa / raw_kappa(K, A))


def random_rhs(rng, grid, n, n_terms=3, max_power=2):
    """Gaussian-coefficient exp-polynomial that has decayed to ~e^-40 at T."""
    r_lo = max(0.5, 40.0 / grid.T)
    return ExpPoly(rng.standard_normal((n_terms, n)),
                   rng.uniform(r_lo, r_lo + 2.0, n_terms),
                   rng.integers(0, max_power + 1, n_terms))


def random_perturbation(rng, n, kappa, alpha_target):
    """Random B1, B2, B3 rescaled so that alpha(kappa) equals ``alpha_target``."""
    from .analyzer import alpha_of
    from .perturbed import Perturbation

    mats = [rng.standard_normal((n, n)) * rng.uniform(0.2, 1.0) for _ in range(3)]
    p = Perturbation(*mats)
    s = alpha_target / alpha_of(kappa, p.norms())
    return Perturbation(*(s * B for B in mats))
